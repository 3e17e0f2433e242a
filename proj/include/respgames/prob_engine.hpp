#pragma once

#include <cstdint>
#include <vector>

#include "respgames/logic.hpp"
#include "respgames/model.hpp"

namespace respgames {

enum class OptDir { Min, Max };

// How the complement coalition behaves in reward queries: against the
// coalition's objective, or fully cooperative.
enum class AdversaryMode { Hostile, Any };

// Probability that a path of length horizon(outcome) drawn under the full
// profile satisfies the outcome. Forward dynamic program over
// (state, monitor code); exact up to float rounding.
double sat_probability(const Game& game, const StrategyProfile& profile,
                       const OutcomeSet& outcome, StateId from = -1);

// One adversary decision cell: the complement's joint choice at
// (step, state, monitor code). Coalition slots hold -1.
struct AdversaryDecision {
  int step;
  StateId state;
  int code;
  JointAction joint;
};

struct ExtremalResult {
  double value = 0;
  // Optimum from every start state (value_at[s] starts the monitor at s).
  std::vector<double> value_at;
  std::vector<AdversaryDecision> witness;
};

// Extremal satisfaction probability when the profile's scope is fixed and
// every other agent jointly optimizes in direction dir. The adversary is
// deterministic per (step, state, monitor code); ties break to the
// lexicographically first joint action.
ExtremalResult extremal_probability(const Game& game, const StrategyProfile& partial,
                                    const OutcomeSet& outcome, OptDir dir,
                                    StateId from = -1);

// Value of the zero-sum concurrent game where the coalition maximizes
// (maximize=true) or minimizes the satisfaction probability and the
// complement opposes. One matrix game per (step, state, monitor code).
struct GameValueResult {
  double value = 0;
  std::vector<double> value_at;
};
GameValueResult game_value_probability(const Game& game, Coalition coalition,
                                       const OutcomeSet& outcome, bool maximize,
                                       StateId from = -1);

// E[rew(reward, outcome)] under a full profile, where a length-k path scores
// sum_{j<k} (state+action reward at step j) + final state reward when it
// satisfies the outcome and 0 otherwise.
double expected_reward(const Game& game, const StrategyProfile& profile,
                       const RewardStructure& reward, const OutcomeSet& outcome,
                       StateId from = -1);

// Game value of the same functional: the coalition optimizes toward dir,
// the complement opposes (Hostile) or cooperates (Any). Backward induction
// over (step, state, monitor code, accumulated reward).
double robust_expected_reward(const Game& game, Coalition coalition,
                              const RewardStructure& reward, const OutcomeSet& outcome,
                              OptDir dir, AdversaryMode adversary, StateId from = -1);

struct McEstimate {
  double estimate = 0;
  double stderr_ = 0;
  long long samples = 0;
};

// Seeded Monte Carlo estimate of sat_probability / expected_reward. Streams
// are split per fixed-size sample block, so results depend only on
// (inputs, samples, seed).
McEstimate monte_carlo_sat(const Game& game, const StrategyProfile& profile,
                           const OutcomeSet& outcome, long long samples,
                           uint64_t seed, StateId from = -1);
McEstimate monte_carlo_reward(const Game& game, const StrategyProfile& profile,
                              const RewardStructure& reward, const OutcomeSet& outcome,
                              long long samples, uint64_t seed, StateId from = -1);

}  // namespace respgames
