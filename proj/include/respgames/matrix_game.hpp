#pragma once

#include <vector>

namespace respgames {

// Mixed equilibrium of the zero-sum game with payoff matrix m (row player
// maximizes m[r][c], column player minimizes).
struct MatrixGameSolution {
  double value = 0;
  std::vector<double> row;  // maximizer's strategy
  std::vector<double> col;  // minimizer's strategy
};

// Solves the game by linear programming. The returned strategies guarantee
// min_c (row' m)_c and max_r (m col)_r within ~1e-12 of the value.
MatrixGameSolution matrix_game_value(const std::vector<std::vector<double>>& m);

}  // namespace respgames
