#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "respgames/logic.hpp"
#include "respgames/model.hpp"
#include "respgames/model_io.hpp"
#include "respgames/prob_engine.hpp"
#include "respgames/responsibility.hpp"

namespace respgames {

// Everything a formula evaluation needs. The game (and the parsed model, if
// one is used) must outlive the context; satisfaction sets are cached per
// formula node under a lock, so distinct formulas may check concurrently.
struct CheckContext {
  const Game& game;
  std::map<std::string, StrategyProfile> profiles;
  std::map<std::string, RewardStructure> rewards;
  double tolerance = 1e-9;
  AdversaryMode reward_adversary = AdversaryMode::Hostile;
  RespMode degree_mode = RespMode::Min;

  explicit CheckContext(const Game& g) : game(g) {}
  explicit CheckContext(const ParsedModel& m)
      : game(m.game), profiles(m.profiles), rewards(m.rewards) {}

  CheckContext(const CheckContext&) = delete;
  CheckContext& operator=(const CheckContext&) = delete;

  // caches keyed by canonical formula text, so structurally equal formulas
  // share one computation regardless of node identity or lifetime
  mutable std::mutex memo_mutex;
  mutable std::map<std::string, std::vector<char>> memo_sat;
  mutable std::map<std::string, std::vector<double>> memo_value;
};

struct Verdict {
  std::string formula;  // canonical printing
  StateId state = -1;
  bool truth = false;
  // The computed probability / reward / degree behind a coalition operator's
  // comparison; one computation serves every bound against it.
  std::optional<double> value;
  std::optional<std::string> witness;
};

// Truth of the formula at one state. Coalition operators dispatch to the
// game-value, robust-reward, and responsibility engines; state subformulas
// inside path operators are evaluated bottom-up first.
Verdict eval_state(const CheckContext& ctx, StateId state, const StateFormula& f);

// eval_state at the initial state.
Verdict check(const CheckContext& ctx, const StateFormula& f);

// All states where the formula holds, ascending.
std::vector<StateId> sat_set(const CheckContext& ctx, const StateFormula& f);

}  // namespace respgames
