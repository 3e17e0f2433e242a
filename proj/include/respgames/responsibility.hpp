#pragma once

#include <map>
#include <optional>
#include <vector>

#include "respgames/logic.hpp"
#include "respgames/model.hpp"
#include "respgames/prob_engine.hpp"

namespace respgames {

// Direction of the coalition value: min treats the outcome as undesirable
// (the rest of the world tries to prevent it), max as desirable.
enum class RespMode { Min, Max };

// v for every subset of the scope coalition under a fixed full profile.
struct CoalitionValueTable {
  Coalition scope;
  RespMode mode = RespMode::Min;
  int horizon = 0;
  std::map<uint32_t, double> entries;  // coalition mask -> v

  double at(Coalition c) const { return entries.at(c.mask()); }
  // Subsets ordered by size, then lexicographically by member list.
  std::vector<Coalition> ordered() const;
};

// Number of worker threads: explicit value, else RESPGAMES_THREADS, else
// hardware concurrency.
int resolve_threads(int requested = 0);

// v_{sigma,phi}(A): probability of the outcome when A is held to the
// profile and everyone else jointly optimizes against (min) or for (max) it.
double coalition_value(const Game& game, const StrategyProfile& profile,
                       const OutcomeSet& outcome, Coalition a, RespMode mode,
                       StateId from = -1);

// All 2^|scope| coalition values. Entries are independent and computed in
// parallel when threads != 1.
CoalitionValueTable value_table(const Game& game, const StrategyProfile& profile,
                                const OutcomeSet& outcome, Coalition scope,
                                RespMode mode, StateId from = -1, int threads = 0);

// Shapley attribution of agent i within the table's scope:
// sum_J |J|!(|A|-|J|-1)!/|A|! (v(J+i) - v(J)).
double bcr_degree(const CoalitionValueTable& table, AgentId i);
double bcr_degree(const Game& game, const StrategyProfile& profile,
                  const OutcomeSet& outcome, AgentId i, Coalition scope,
                  RespMode mode, StateId from = -1);

// Upsilon = v(scope) - v(empty): the responsibility available to distribute.
double attributable_value(const CoalitionValueTable& table);
double attributable_value(const Game& game, const StrategyProfile& profile,
                          const OutcomeSet& outcome, RespMode mode,
                          StateId from = -1);

struct ResponsibilityReport {
  RespMode mode = RespMode::Min;
  int horizon = 0;
  double upsilon = 0;
  std::map<AgentId, double> degrees;  // one entry per scope member
  CoalitionValueTable table;
};

ResponsibilityReport responsibility_report(const Game& game,
                                           const StrategyProfile& profile,
                                           const OutcomeSet& outcome, Coalition scope,
                                           RespMode mode, StateId from = -1,
                                           int threads = 0);

// Certificate for qualitative responsibility: under sigma_J alone the
// recorded history avoids the outcome, while all sigma_{J+i}-compatible
// histories hit it (histories_checked of them).
struct BcrWitness {
  AgentId agent = -1;
  Coalition coalition;  // J, excludes the agent
  std::vector<StateId> violating_states;
  std::vector<JointAction> violating_actions;
  long long histories_checked = 0;
};

// Whether some coalition J (not containing i) leaves the outcome evitable
// while J plus i forces it; compatibility requires positive strategy
// support for fixed agents and positive transition probability. Witness
// coalitions are tried in lexicographic member order.
std::optional<BcrWitness> qualitative_bcr(const Game& game,
                                          const StrategyProfile& profile,
                                          const OutcomeSet& outcome, AgentId agent,
                                          StateId from = -1);

// No support history (any available actions, positive probabilities)
// satisfies both formulas within the common horizon.
bool check_disjoint(const Game& game, const ResolvedPath& f1, const ResolvedPath& f2,
                    StateId from = -1);
bool check_disjoint(const Game& game, const PathFormula& f1, const PathFormula& f2,
                    StateId from = -1);

// Some strategy profile keeps the outcome probability below 1.
bool check_avoidable(const Game& game, const OutcomeSet& outcome, StateId from = -1);
bool check_avoidable(const Game& game, const PathFormula& f, StateId from = -1);

}  // namespace respgames
