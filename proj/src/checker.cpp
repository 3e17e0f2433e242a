#include "respgames/checker.hpp"

#include "respgames/errors.hpp"

namespace respgames {

namespace {

const std::vector<char>& sat_vector(const CheckContext& ctx, const StateFormula& f);

Coalition coalition_of(const Game& game, const std::vector<std::string>& names) {
  std::vector<AgentId> ids;
  for (const std::string& n : names) ids.push_back(game.agent_id(n));
  return Coalition::of(ids);
}

OutcomeSet outcome_for(const CheckContext& ctx, const PathFormula& path) {
  StateEvaluator eval = [&ctx](StateId s, const StateFormula& sf) {
    return sat_vector(ctx, sf)[s] != 0;
  };
  OutcomeSet outcome;
  outcome.alts.push_back(resolve_path(path, ctx.game.num_states(), eval));
  return outcome;
}

// Per-state numeric value of a coalition operator, cached by node identity.
std::vector<double> compute_values(const CheckContext& ctx, const StateFormula& f) {
  const Game& game = ctx.game;
  Coalition coal = coalition_of(game, f.agents);
  OutcomeSet outcome = outcome_for(ctx, *f.path);
  bool wants_high = f.rel == Rel::Ge || f.rel == Rel::Gt;
  std::vector<double> values(game.num_states());

  switch (f.kind) {
    case StateFormula::Kind::CoalitionP: {
      GameValueResult gv = game_value_probability(game, coal, outcome, wants_high);
      values = gv.value_at;
      break;
    }
    case StateFormula::Kind::CoalitionR: {
      auto it = ctx.rewards.find(f.reward);
      if (it == ctx.rewards.end())
        throw UnknownReward("no reward structure named '" + f.reward + "'");
      OptDir dir = wants_high ? OptDir::Max : OptDir::Min;
      for (StateId s = 0; s < game.num_states(); ++s)
        values[s] = robust_expected_reward(game, coal, it->second, outcome, dir,
                                           ctx.reward_adversary, s);
      break;
    }
    case StateFormula::Kind::CoalitionD: {
      auto it = ctx.profiles.find(f.d_profile);
      if (it == ctx.profiles.end())
        throw UnknownProfile("no profile named '" + f.d_profile + "'");
      AgentId agent = game.agent_id(f.d_agent);
      for (StateId s = 0; s < game.num_states(); ++s)
        values[s] = bcr_degree(game, it->second, outcome, agent, coal,
                               ctx.degree_mode, s);
      break;
    }
    default:
      throw Error("internal: compute_values on a non-coalition node");
  }
  return values;
}

const std::vector<double>& value_vector(const CheckContext& ctx,
                                        const StateFormula& f) {
  std::string key = print_formula(f);
  {
    std::lock_guard<std::mutex> lock(ctx.memo_mutex);
    auto it = ctx.memo_value.find(key);
    if (it != ctx.memo_value.end()) return it->second;
  }
  std::vector<double> values = compute_values(ctx, f);
  std::lock_guard<std::mutex> lock(ctx.memo_mutex);
  return ctx.memo_value.emplace(std::move(key), std::move(values)).first->second;
}

std::vector<char> compute_sat(const CheckContext& ctx, const StateFormula& f) {
  const Game& game = ctx.game;
  std::vector<char> sat(game.num_states(), 0);
  switch (f.kind) {
    case StateFormula::Kind::True:
      sat.assign(game.num_states(), 1);
      break;
    case StateFormula::Kind::Atom: {
      if (!game.has_atom(f.atom))
        throw UnknownAtom("no atom named '" + f.atom + "'");
      AtomId a = game.atom_id(f.atom);
      for (StateId s = 0; s < game.num_states(); ++s) sat[s] = game.label(s, a);
      break;
    }
    case StateFormula::Kind::Not: {
      const std::vector<char>& sub = sat_vector(ctx, *f.left);
      for (StateId s = 0; s < game.num_states(); ++s) sat[s] = !sub[s];
      break;
    }
    case StateFormula::Kind::And: {
      const std::vector<char>& l = sat_vector(ctx, *f.left);
      const std::vector<char>& r = sat_vector(ctx, *f.right);
      for (StateId s = 0; s < game.num_states(); ++s) sat[s] = l[s] && r[s];
      break;
    }
    case StateFormula::Kind::CoalitionP:
    case StateFormula::Kind::CoalitionR:
    case StateFormula::Kind::CoalitionD: {
      const std::vector<double>& values = value_vector(ctx, f);
      for (StateId s = 0; s < game.num_states(); ++s)
        sat[s] = rel_holds(values[s], f.rel, f.bound, ctx.tolerance);
      break;
    }
  }
  return sat;
}

const std::vector<char>& sat_vector(const CheckContext& ctx, const StateFormula& f) {
  std::string key = print_formula(f);
  {
    std::lock_guard<std::mutex> lock(ctx.memo_mutex);
    auto it = ctx.memo_sat.find(key);
    if (it != ctx.memo_sat.end()) return it->second;
  }
  std::vector<char> sat = compute_sat(ctx, f);
  std::lock_guard<std::mutex> lock(ctx.memo_mutex);
  return ctx.memo_sat.emplace(std::move(key), std::move(sat)).first->second;
}

bool is_coalition(const StateFormula& f) {
  return f.kind == StateFormula::Kind::CoalitionP ||
         f.kind == StateFormula::Kind::CoalitionR ||
         f.kind == StateFormula::Kind::CoalitionD;
}

}  // namespace

Verdict eval_state(const CheckContext& ctx, StateId state, const StateFormula& f) {
  if (state < 0 || state >= ctx.game.num_states())
    throw UnknownIdentifier("state id " + std::to_string(state) + " out of range");
  Verdict v;
  v.formula = print_formula(f);
  v.state = state;
  v.truth = sat_vector(ctx, f)[state] != 0;
  if (is_coalition(f)) v.value = value_vector(ctx, f)[state];
  return v;
}

Verdict check(const CheckContext& ctx, const StateFormula& f) {
  return eval_state(ctx, ctx.game.initial_state(), f);
}

std::vector<StateId> sat_set(const CheckContext& ctx, const StateFormula& f) {
  const std::vector<char>& sat = sat_vector(ctx, f);
  std::vector<StateId> out;
  for (StateId s = 0; s < ctx.game.num_states(); ++s)
    if (sat[s]) out.push_back(s);
  return out;
}

}  // namespace respgames
