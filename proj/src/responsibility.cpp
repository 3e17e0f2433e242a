#include "respgames/responsibility.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "respgames/errors.hpp"

namespace respgames {

namespace {

// Size first, then lexicographic member order; puts the empty coalition first.
bool coalition_less(Coalition a, Coalition b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a.members() < b.members();
}

std::vector<Coalition> subsets_ordered(Coalition scope) {
  std::vector<Coalition> out;
  uint32_t m = scope.mask();
  uint32_t sub = 0;
  while (true) {
    out.push_back(Coalition(sub));
    if (sub == m) break;
    sub = (sub - m) & m;  // smallest submask greater than sub
  }
  std::sort(out.begin(), out.end(), coalition_less);
  return out;
}

OptDir dir_of(RespMode mode) {
  return mode == RespMode::Min ? OptDir::Min : OptDir::Max;
}

double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

void require_scope(const StrategyProfile& profile, Coalition scope) {
  if (!scope.subset_of(profile.scope())) {
    Coalition missing(scope.mask() & ~profile.scope().mask());
    throw AgentNotInScope("profile lacks strategies for agent ids in coalition mask " +
                          std::to_string(missing.mask()));
  }
}

void require_small(Coalition scope) {
  if (scope.size() > kMaxCoalitionAgents)
    throw CoalitionTooLarge("coalition of " + std::to_string(scope.size()) +
                            " agents exceeds the enumeration cap of " +
                            std::to_string(kMaxCoalitionAgents));
}

// Per-state, per-agent probability of each action id under the profile;
// -1 marks unavailable actions.
std::vector<std::vector<std::vector<double>>> dense_probs(const Game& game,
                                                          const StrategyProfile& profile) {
  std::vector<std::vector<std::vector<double>>> out(game.num_states());
  for (StateId s = 0; s < game.num_states(); ++s) {
    out[s].resize(game.num_agents());
    for (AgentId a = 0; a < game.num_agents(); ++a) {
      out[s][a].assign(game.num_actions(a), -1.0);
      const auto& avail = game.available(s, a);
      for (int pos = 0; pos < (int)avail.size(); ++pos)
        out[s][a][avail[pos]] = profile.at(a).at(s, pos);
    }
  }
  return out;
}

// Reachability of a non-satisfying horizon-length completion when the fixed
// coalition only moves inside its strategy support.
struct QualSearch {
  const Game& game;
  const OutcomeSet& outcome;
  const std::vector<std::vector<std::vector<double>>>& probs;
  int horizon;
  Coalition fixed;
  // memo[t][state][code]: 0 unknown, 1 no, 2 yes
  std::vector<std::vector<std::vector<char>>> memo;

  QualSearch(const Game& g, const OutcomeSet& o,
             const std::vector<std::vector<std::vector<double>>>& p, Coalition f)
      : game(g), outcome(o), probs(p), horizon(o.horizon()), fixed(f) {
    memo.assign(horizon + 1,
                std::vector<std::vector<char>>(game.num_states(),
                                               std::vector<char>(o.num_codes(), 0)));
  }

  bool compatible(StateId s, const JointAction& joint) const {
    for (AgentId a : fixed.members())
      if (probs[s][a][joint[a]] <= 0) return false;
    return true;
  }

  bool violating_reachable(int t, StateId s, int code) {
    if (outcome.satisfied(code)) return false;
    if (t == horizon) return true;
    char& slot = memo[t][s][code];
    if (slot) return slot == 2;
    slot = 1;
    const auto& joints = game.joint_actions(s);
    for (int j = 0; j < (int)joints.size(); ++j) {
      if (!compatible(s, joints[j])) continue;
      for (const auto& e : game.transition(s, j)) {
        int next = outcome.step_code(code, e.state, t + 1);
        if (violating_reachable(t + 1, e.state, next)) {
          slot = 2;
          return true;
        }
      }
    }
    return false;
  }

  // First violating history in joint-action / successor order; only valid
  // after violating_reachable returned true for the root.
  void extract(StateId start, std::vector<StateId>* states,
               std::vector<JointAction>* actions) {
    states->clear();
    actions->clear();
    StateId s = start;
    int code = outcome.init_code(s);
    states->push_back(s);
    for (int t = 0; t < horizon; ++t) {
      const auto& joints = game.joint_actions(s);
      bool advanced = false;
      for (int j = 0; j < (int)joints.size() && !advanced; ++j) {
        if (!compatible(s, joints[j])) continue;
        for (const auto& e : game.transition(s, j)) {
          int next = outcome.step_code(code, e.state, t + 1);
          if (violating_reachable(t + 1, e.state, next)) {
            actions->push_back(joints[j]);
            states->push_back(e.state);
            s = e.state;
            code = next;
            advanced = true;
            break;
          }
        }
      }
      if (!advanced) throw Error("internal: lost the violating branch");
    }
  }

  // Number of compatible horizon-length histories from the start state.
  long long count_histories(StateId start) {
    std::vector<std::vector<long long>> cnt(
        horizon + 1, std::vector<long long>(game.num_states(), 0));
    for (StateId s = 0; s < game.num_states(); ++s) cnt[horizon][s] = 1;
    for (int t = horizon - 1; t >= 0; --t) {
      for (StateId s = 0; s < game.num_states(); ++s) {
        long long total = 0;
        const auto& joints = game.joint_actions(s);
        for (int j = 0; j < (int)joints.size(); ++j) {
          if (!compatible(s, joints[j])) continue;
          for (const auto& e : game.transition(s, j)) total += cnt[t + 1][e.state];
        }
        cnt[t][s] = total;
      }
    }
    return cnt[0][start];
  }
};

StateId resolve_start(const Game& game, StateId from) {
  if (from < 0) return game.initial_state();
  if (from >= game.num_states())
    throw UnknownIdentifier("state id " + std::to_string(from) + " out of range");
  return from;
}

}  // namespace

std::vector<Coalition> CoalitionValueTable::ordered() const {
  return subsets_ordered(scope);
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RESPGAMES_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : (int)hw;
}

double coalition_value(const Game& game, const StrategyProfile& profile,
                       const OutcomeSet& outcome, Coalition a, RespMode mode,
                       StateId from) {
  require_scope(profile, a);
  return extremal_probability(game, profile.restricted(a), outcome, dir_of(mode), from)
      .value;
}

CoalitionValueTable value_table(const Game& game, const StrategyProfile& profile,
                                const OutcomeSet& outcome, Coalition scope,
                                RespMode mode, StateId from, int threads) {
  require_small(scope);
  require_scope(profile, scope);

  CoalitionValueTable table;
  table.scope = scope;
  table.mode = mode;
  table.horizon = outcome.horizon();

  std::vector<Coalition> subsets = subsets_ordered(scope);
  std::vector<double> values(subsets.size());
  int workers = std::min<int>(resolve_threads(threads), (int)subsets.size());
  if (workers <= 1 || subsets.size() < 4) {
    for (size_t i = 0; i < subsets.size(); ++i)
      values[i] = coalition_value(game, profile, outcome, subsets[i], mode, from);
  } else {
    std::atomic<size_t> cursor{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
      while (true) {
        size_t i = cursor.fetch_add(1);
        if (i >= subsets.size()) return;
        try {
          values[i] = coalition_value(game, profile, outcome, subsets[i], mode, from);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  for (size_t i = 0; i < subsets.size(); ++i)
    table.entries[subsets[i].mask()] = values[i];
  return table;
}

double bcr_degree(const CoalitionValueTable& table, AgentId i) {
  if (!table.scope.contains(i))
    throw AgentNotInScope("agent id " + std::to_string(i) +
                          " is outside the responsibility scope");
  int n = table.scope.size();
  double total = 0;
  uint32_t others = table.scope.without(i).mask();
  uint32_t sub = 0;
  while (true) {
    int j = __builtin_popcount(sub);
    double weight = factorial(j) * factorial(n - j - 1) / factorial(n);
    total += weight * (table.entries.at(sub | (1u << i)) - table.entries.at(sub));
    if (sub == others) break;
    sub = (sub - others) & others;
  }
  return total;
}

double bcr_degree(const Game& game, const StrategyProfile& profile,
                  const OutcomeSet& outcome, AgentId i, Coalition scope,
                  RespMode mode, StateId from) {
  return bcr_degree(value_table(game, profile, outcome, scope, mode, from), i);
}

double attributable_value(const CoalitionValueTable& table) {
  return table.entries.at(table.scope.mask()) - table.entries.at(0);
}

double attributable_value(const Game& game, const StrategyProfile& profile,
                          const OutcomeSet& outcome, RespMode mode, StateId from) {
  Coalition all = Coalition::all(game.num_agents());
  require_scope(profile, all);
  double v_all = coalition_value(game, profile, outcome, all, mode, from);
  double v_none = coalition_value(game, profile, outcome, Coalition(), mode, from);
  return v_all - v_none;
}

ResponsibilityReport responsibility_report(const Game& game,
                                           const StrategyProfile& profile,
                                           const OutcomeSet& outcome, Coalition scope,
                                           RespMode mode, StateId from, int threads) {
  ResponsibilityReport report;
  report.mode = mode;
  report.horizon = outcome.horizon();
  report.table = value_table(game, profile, outcome, scope, mode, from, threads);
  report.upsilon = attributable_value(report.table);
  for (AgentId a : scope.members()) report.degrees[a] = bcr_degree(report.table, a);
  return report;
}

std::optional<BcrWitness> qualitative_bcr(const Game& game,
                                          const StrategyProfile& profile,
                                          const OutcomeSet& outcome, AgentId agent,
                                          StateId from) {
  if (!profile.full())
    throw PartialProfile("qualitative responsibility needs a full profile");
  if (agent < 0 || agent >= game.num_agents())
    throw UnknownIdentifier("agent id " + std::to_string(agent) + " out of range");
  require_small(Coalition::all(game.num_agents()));
  StateId start = resolve_start(game, from);

  auto probs = dense_probs(game, profile);
  auto search_for = [&](Coalition fixed) {
    return QualSearch(game, outcome, probs, fixed);
  };
  auto root_violating = [&](Coalition fixed) {
    QualSearch qs = search_for(fixed);
    return qs.violating_reachable(0, start, outcome.init_code(start));
  };

  for (Coalition j : subsets_ordered(Coalition::all(game.num_agents()).without(agent))) {
    if (!root_violating(j)) continue;          // J alone cannot avoid the outcome
    Coalition with_agent = j.with(agent);
    if (root_violating(with_agent)) continue;  // adding the agent does not force it
    BcrWitness w;
    w.agent = agent;
    w.coalition = j;
    QualSearch qs = search_for(j);
    qs.violating_reachable(0, start, outcome.init_code(start));
    qs.extract(start, &w.violating_states, &w.violating_actions);
    QualSearch all_sat = search_for(with_agent);
    w.histories_checked = all_sat.count_histories(start);
    return w;
  }
  return std::nullopt;
}

bool check_disjoint(const Game& game, const ResolvedPath& f1, const ResolvedPath& f2,
                    StateId from) {
  StateId start = resolve_start(game, from);
  int k = std::max(f1.horizon(), f2.horizon());
  // visited[t][state][status pair]
  std::vector<std::vector<std::vector<char>>> visited(
      k + 1, std::vector<std::vector<char>>(game.num_states(), std::vector<char>(9, 0)));

  struct Frame {
    int t;
    StateId s;
    Status a, b;
  };
  std::vector<Frame> stack;
  auto push = [&](int t, StateId s, Status a, Status b) -> bool {
    // Both satisfied statuses are sticky, so reaching them decides the search.
    if (a == Status::Satisfied && b == Status::Satisfied) return true;
    if (a == Status::Violated || b == Status::Violated) return false;
    if (t == k) return false;
    char& slot = visited[t][s][(int)a * 3 + (int)b];
    if (slot) return false;
    slot = 1;
    stack.push_back({t, s, a, b});
    return false;
  };

  if (push(0, start, f1.init(start), f2.init(start))) return false;
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    for (int j = 0; j < (int)game.joint_actions(f.s).size(); ++j) {
      for (const auto& e : game.transition(f.s, j)) {
        Status a = f1.step(f.a, e.state, f.t + 1);
        Status b = f2.step(f.b, e.state, f.t + 1);
        if (push(f.t + 1, e.state, a, b)) return false;
      }
    }
  }
  return true;
}

bool check_disjoint(const Game& game, const PathFormula& f1, const PathFormula& f2,
                    StateId from) {
  StateEvaluator eval = atom_evaluator(game);
  return check_disjoint(game, resolve_path(f1, game.num_states(), eval),
                        resolve_path(f2, game.num_states(), eval), from);
}

bool check_avoidable(const Game& game, const OutcomeSet& outcome, StateId from) {
  StrategyProfile empty(game.num_agents());
  double floor =
      extremal_probability(game, empty, outcome, OptDir::Min, from).value;
  return floor < 1.0 - 1e-9;
}

bool check_avoidable(const Game& game, const PathFormula& f, StateId from) {
  return check_avoidable(game, resolve_outcome(game, f), from);
}

}  // namespace respgames
