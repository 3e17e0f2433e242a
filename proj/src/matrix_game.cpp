#include "respgames/matrix_game.hpp"

#include <algorithm>
#include <cmath>

#include "respgames/errors.hpp"

namespace respgames {

namespace {

constexpr double kPivotEps = 1e-12;

// max 1'y  s.t.  a y <= 1, y >= 0, every a[i][j] >= 1 (so the LP is bounded
// and the origin is feasible). Returns the optimum, the primal y and the
// duals u (one per constraint); Bland's rule keeps the walk finite.
double bounded_simplex(const std::vector<std::vector<double>>& a,
                       std::vector<double>& y, std::vector<double>& u) {
  int m = (int)a.size();
  int n = (int)a[0].size();
  std::vector<std::vector<double>> t(m + 1, std::vector<double>(n + m + 1, 0.0));
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) t[i][j] = a[i][j];
    t[i][n + i] = 1.0;
    t[i][n + m] = 1.0;
    basis[i] = n + i;
  }
  for (int j = 0; j < n; ++j) t[m][j] = -1.0;

  while (true) {
    int enter = -1;
    for (int j = 0; j < n + m; ++j)
      if (t[m][j] < -kPivotEps) {
        enter = j;
        break;
      }
    if (enter < 0) break;
    int leave = -1;
    double best = 0;
    for (int i = 0; i < m; ++i) {
      if (t[i][enter] <= kPivotEps) continue;
      double ratio = t[i][n + m] / t[i][enter];
      if (leave < 0 || ratio < best - kPivotEps ||
          (ratio < best + kPivotEps && basis[i] < basis[leave])) {
        leave = i;
        best = ratio;
      }
    }
    if (leave < 0) throw Error("unbounded matrix-game program");
    double piv = t[leave][enter];
    for (double& v : t[leave]) v /= piv;
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      double f = t[i][enter];
      if (f == 0.0) continue;
      for (int j = 0; j <= n + m; ++j) t[i][j] -= f * t[leave][j];
    }
    basis[leave] = enter;
  }

  y.assign(n, 0.0);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) y[basis[i]] = t[i][n + m];
  u.assign(m, 0.0);
  for (int i = 0; i < m; ++i) u[i] = t[m][n + i];
  return t[m][n + m];
}

void clean_distribution(std::vector<double>& p) {
  double sum = 0;
  for (double& v : p) {
    if (v < 0) v = 0;
    sum += v;
  }
  if (sum <= 0) {
    p.assign(p.size(), 1.0 / (double)p.size());
    return;
  }
  for (double& v : p) v /= sum;
}

}  // namespace

MatrixGameSolution matrix_game_value(const std::vector<std::vector<double>>& m) {
  if (m.empty() || m[0].empty()) throw Error("empty matrix game");
  int rows = (int)m.size();
  int cols = (int)m[0].size();

  MatrixGameSolution out;
  if (rows == 1) {
    // Pure minimization for the column player; ties go to the lowest index.
    int best = 0;
    for (int j = 1; j < cols; ++j)
      if (m[0][j] < m[0][best]) best = j;
    out.value = m[0][best];
    out.row = {1.0};
    out.col.assign(cols, 0.0);
    out.col[best] = 1.0;
    return out;
  }
  if (cols == 1) {
    int best = 0;
    for (int i = 1; i < rows; ++i)
      if (m[i][0] > m[best][0]) best = i;
    out.value = m[best][0];
    out.row.assign(rows, 0.0);
    out.row[best] = 1.0;
    out.col = {1.0};
    return out;
  }

  double lo = m[0][0];
  for (const auto& r : m)
    for (double v : r) lo = std::min(lo, v);
  double shift = 1.0 - lo;
  std::vector<std::vector<double>> shifted(rows, std::vector<double>(cols));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) shifted[i][j] = m[i][j] + shift;

  std::vector<double> y, u;
  double total = bounded_simplex(shifted, y, u);
  double value = 1.0 / total;
  out.value = value - shift;
  out.col = std::move(y);
  out.row = std::move(u);
  for (double& v : out.col) v *= value;
  for (double& v : out.row) v *= value;
  clean_distribution(out.row);
  clean_distribution(out.col);
  return out;
}

}  // namespace respgames
