#include "respgames/parametric.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <set>
#include <sstream>

#include "respgames/prob_engine.hpp"

namespace respgames {

namespace {

constexpr double kAdmTol = 1e-9;

std::vector<AgentId> parametrized_members(const Psmas& ps) {
  return ps.parametrized.members();
}

// Aligns an Evaluation with a variable list; missing names throw.
std::vector<double> point_of(const std::vector<std::string>& vars,
                             const Evaluation& eval) {
  std::vector<double> point(vars.size());
  for (size_t i = 0; i < vars.size(); ++i) {
    auto it = eval.find(vars[i]);
    if (it == eval.end()) throw MissingParameter(vars[i]);
    point[i] = it->second;
  }
  return point;
}

int position_of(const Game& game, StateId s, AgentId agent, ActionId action) {
  const auto& avail = game.available(s, agent);
  for (size_t pos = 0; pos < avail.size(); ++pos)
    if (avail[pos] == action) return (int)pos;
  return -1;
}

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

std::string param_name(const Game& game, AgentId agent, StateId state,
                       ActionId action) {
  return "x_" + game.agent_name(agent) + "_" + game.state_name(state) + "_" +
         game.action_name(agent, action);
}

Polynomial Psmas::strategy_factor(StateId s, AgentId agent, int pos) const {
  if (!parametrized.contains(agent))
    return Polynomial::constant(variables, constants.at(agent).at(s, pos));
  int idx = var_at[s][agent][pos];
  if (idx >= 0) return Polynomial::variable(variables, variables[idx]);
  // Last available action: the complement of its siblings.
  Polynomial p = Polynomial::constant(variables, 1.0);
  const auto& row = var_at[s][agent];
  for (size_t q = 0; q < row.size(); ++q)
    if (row[q] >= 0)
      p = p - Polynomial::variable(variables, variables[row[q]]);
  return p;
}

Psmas build_psmas(const Game& game, Coalition parametrized,
                  const StrategyProfile& constants) {
  if (parametrized.empty())
    throw Error("build_psmas: no agents to parametrize");
  if (!parametrized.subset_of(Coalition::all(game.num_agents())))
    throw UnknownIdentifier("build_psmas: coalition names agents outside the game");

  Psmas ps{game};
  ps.parametrized = parametrized;
  for (AgentId a = 0; a < game.num_agents(); ++a) {
    if (parametrized.contains(a)) continue;
    if (constants.num_agents() <= a || !constants.has(a))
      throw MissingConstantStrategy("no constant strategy for agent " +
                                    game.agent_name(a));
    validate_strategy(game, constants.at(a));
  }
  ps.constants = StrategyProfile(game.num_agents());
  for (AgentId a = 0; a < game.num_agents(); ++a)
    if (!parametrized.contains(a)) ps.constants.set(constants.at(a));

  // Parameters in (agent, state, availability position) order; the last
  // position per (agent, state) gets a parameter but no free variable.
  ps.var_at.assign(game.num_states(),
                   std::vector<std::vector<int>>(game.num_agents()));
  for (AgentId a : parametrized.members()) {
    for (StateId s = 0; s < game.num_states(); ++s) {
      const auto& avail = game.available(s, a);
      ps.var_at[s][a].assign(avail.size(), -1);
      for (size_t pos = 0; pos < avail.size(); ++pos) {
        std::string name = param_name(game, a, s, avail[pos]);
        ps.all_params.push_back(name);
        if (pos + 1 < avail.size()) {
          ps.var_at[s][a][pos] = (int)ps.variables.size();
          ps.variables.push_back(name);
        }
      }
    }
  }

  ps.trans_poly.resize(game.num_states());
  for (StateId s = 0; s < game.num_states(); ++s) {
    const auto& joints = game.joint_actions(s);
    ps.trans_poly[s].resize(joints.size());
    for (size_t j = 0; j < joints.size(); ++j) {
      Polynomial joint_factor = Polynomial::constant(ps.variables, 1.0);
      for (AgentId a = 0; a < game.num_agents(); ++a) {
        int pos = position_of(game, s, a, joints[j][a]);
        joint_factor = joint_factor * ps.strategy_factor(s, a, pos);
      }
      const Distribution& dist = game.transition(s, (int)j);
      ps.trans_poly[s][j].reserve(dist.size());
      for (const auto& entry : dist)
        ps.trans_poly[s][j].push_back(joint_factor * entry.prob);
    }
  }
  return ps;
}

Evaluation complete_evaluation(const Psmas& ps, const Evaluation& eval) {
  Evaluation full = eval;
  const Game& game = ps.skeleton;
  for (AgentId a : parametrized_members(ps)) {
    for (StateId s = 0; s < game.num_states(); ++s) {
      const auto& avail = game.available(s, a);
      double kept_sum = 0;
      for (size_t pos = 0; pos + 1 < avail.size(); ++pos) {
        auto it = full.find(param_name(game, a, s, avail[pos]));
        if (it == full.end())
          throw MissingParameter(param_name(game, a, s, avail[pos]));
        kept_sum += it->second;
      }
      std::string last = param_name(game, a, s, avail.back());
      if (!full.count(last)) full[last] = 1.0 - kept_sum;
    }
  }
  return full;
}

Admissibility admissible(const Psmas& ps, const Evaluation& eval) {
  Evaluation full = complete_evaluation(ps, eval);
  for (const auto& name : ps.all_params)
    if (!full.count(name)) throw MissingParameter(name);

  Admissibility result;
  std::vector<double> point = point_of(ps.variables, full);
  const Game& game = ps.skeleton;

  for (StateId s = 0; s < game.num_states(); ++s) {
    for (size_t j = 0; j < ps.trans_poly[s].size(); ++j) {
      for (const auto& poly : ps.trans_poly[s][j]) {
        double v = poly.eval(point);
        if (v < -kAdmTol || v > 1.0 + kAdmTol)
          result.violations.push_back(
              "condition (1): transition polynomial at state " +
              game.state_name(s) + " evaluates to " + format_value(v));
      }
    }
  }
  for (const auto& name : ps.all_params) {
    double v = full.at(name);
    if (v < -kAdmTol || v > 1.0 + kAdmTol)
      result.violations.push_back("condition (2): parameter " + name + " = " +
                                  format_value(v) + " outside [0,1]");
  }
  for (AgentId a : parametrized_members(ps)) {
    for (StateId s = 0; s < game.num_states(); ++s) {
      const auto& avail = game.available(s, a);
      double sum = 0;
      for (ActionId act : avail) sum += full.at(param_name(game, a, s, act));
      if (std::fabs(sum - 1.0) > kAdmTol)
        result.violations.push_back(
            "condition (3): parameters of " + game.agent_name(a) + " at " +
            game.state_name(s) + " sum to " + format_value(sum));
    }
  }
  result.ok = result.violations.empty();
  return result;
}

StrategyProfile profile_of(const Psmas& ps, const Evaluation& eval) {
  Evaluation full = complete_evaluation(ps, eval);
  const Game& game = ps.skeleton;
  StrategyProfile profile(game.num_agents());
  for (AgentId a = 0; a < game.num_agents(); ++a) {
    if (!ps.parametrized.contains(a)) {
      profile.set(ps.constants.at(a));
      continue;
    }
    Strategy st;
    st.agent = a;
    st.probs.resize(game.num_states());
    for (StateId s = 0; s < game.num_states(); ++s) {
      const auto& avail = game.available(s, a);
      st.probs[s].resize(avail.size());
      for (size_t pos = 0; pos < avail.size(); ++pos)
        st.probs[s][pos] = full.at(param_name(game, a, s, avail[pos]));
    }
    profile.set(std::move(st));
  }
  return profile;
}

Game substitute(const Psmas& ps, const Evaluation& eval) {
  Evaluation full = complete_evaluation(ps, eval);
  std::vector<double> point = point_of(ps.variables, full);
  const Game& game = ps.skeleton;

  GameDescription desc;
  desc.agents = {"env"};
  desc.actions = {{"step"}};
  for (AtomId a = 0; a < game.num_atoms(); ++a)
    desc.atoms.push_back(game.atom_name(a));
  for (StateId s = 0; s < game.num_states(); ++s) {
    GameDescription::StateEntry entry;
    entry.name = game.state_name(s);
    entry.initial = (s == game.initial_state());
    for (AtomId a : game.labels_of(s)) entry.labels.push_back(game.atom_name(a));
    desc.states.push_back(std::move(entry));
  }
  for (StateId s = 0; s < game.num_states(); ++s) {
    std::map<StateId, double> merged;
    for (size_t j = 0; j < ps.trans_poly[s].size(); ++j) {
      const Distribution& dist = game.transition(s, (int)j);
      for (size_t e = 0; e < dist.size(); ++e)
        merged[dist[e].state] += ps.trans_poly[s][j][e].eval(point);
    }
    GameDescription::TransitionDecl decl;
    decl.state = game.state_name(s);
    decl.actions = {"step"};
    for (const auto& [succ, prob] : merged)
      if (prob > 0.0) decl.dist.emplace_back(game.state_name(succ), prob);
    desc.transitions.push_back(std::move(decl));
  }
  return validate_game(desc);
}

namespace {

// Walks the support tree of length-k histories accumulating probability
// polynomials. Satisfied monitors stop early for probabilities (the factor
// sums over remaining steps are identically 1), but reward walks must run
// to the horizon because rewards keep accruing after satisfaction.
struct SymbolicWalk {
  const Psmas& ps;
  const OutcomeSet& outcome;
  const RewardStructure* reward = nullptr;
  Polynomial total;

  SymbolicWalk(const Psmas& p, const OutcomeSet& o, const RewardStructure* r)
      : ps(p), outcome(o), reward(r), total(p.variables) {}

  void run(StateId from) {
    Polynomial one = Polynomial::constant(ps.variables, 1.0);
    rec(from, outcome.init_code(from), 0, one, 0.0);
  }

  void rec(StateId s, int code, int t, const Polynomial& prob, double acc) {
    if (!reward) {
      if (outcome.satisfied(code)) {
        total = total + prob;
        return;
      }
      if (outcome.violated(code)) return;
    }
    if (t == outcome.horizon()) {
      if (reward && outcome.satisfied(code))
        total = total + prob * (acc + reward->state_reward[s]);
      return;
    }
    const auto& joints = ps.skeleton.joint_actions(s);
    for (size_t j = 0; j < joints.size(); ++j) {
      double step_reward =
          reward ? reward->state_reward[s] + reward->action_reward(s, joints[j])
                 : 0.0;
      const Distribution& dist = ps.skeleton.transition(s, (int)j);
      for (size_t e = 0; e < dist.size(); ++e) {
        Polynomial next_prob = prob * ps.trans_poly[s][j][e];
        if (next_prob.is_zero()) continue;
        rec(dist[e].state, outcome.step_code(code, dist[e].state, t + 1), t + 1,
            next_prob, acc + step_reward);
      }
    }
  }
};

StateId resolve_from(const Game& game, StateId from) {
  if (from < 0) return game.initial_state();
  if (from >= game.num_states())
    throw UnknownIdentifier("state index out of range: " + std::to_string(from));
  return from;
}

}  // namespace

Polynomial symbolic_sat_probability(const Psmas& ps, const OutcomeSet& outcome,
                                    StateId from) {
  SymbolicWalk walk(ps, outcome, nullptr);
  walk.run(resolve_from(ps.skeleton, from));
  return walk.total;
}

Polynomial symbolic_sat_probability(const Psmas& ps, const PathFormula& f,
                                    StateId from) {
  return symbolic_sat_probability(ps, resolve_outcome(ps.skeleton, f), from);
}

Polynomial symbolic_expected_payoff(const Psmas& ps, const RewardStructure& reward,
                                    const OutcomeSet& outcome, StateId from) {
  SymbolicWalk walk(ps, outcome, &reward);
  walk.run(resolve_from(ps.skeleton, from));
  return walk.total;
}

Polynomial symbolic_expected_payoff(const Psmas& ps, const RewardStructure& reward,
                                    const PathFormula& f, StateId from) {
  return symbolic_expected_payoff(ps, reward, resolve_outcome(ps.skeleton, f),
                                  from);
}

namespace {

// One (agent, state) mixing slot with at least one free variable.
struct VarSlot {
  AgentId agent;
  StateId state;
  std::vector<int> kept;  // variable indices, availability order
  int arity;              // number of available actions
};

std::vector<VarSlot> slots_of(const Psmas& ps) {
  std::vector<VarSlot> slots;
  for (AgentId a : ps.parametrized.members()) {
    for (StateId s = 0; s < ps.skeleton.num_states(); ++s) {
      const auto& row = ps.var_at[s][a];
      if (row.size() < 2) continue;
      VarSlot slot;
      slot.agent = a;
      slot.state = s;
      slot.arity = (int)row.size();
      for (size_t pos = 0; pos + 1 < row.size(); ++pos)
        slot.kept.push_back(row[pos]);
      slots.push_back(std::move(slot));
    }
  }
  return slots;
}

// Grid points over one slot's simplex with per-variable step 0.05; for
// multi-variable slots the box grid is filtered to the simplex.
std::vector<std::vector<double>> slot_grid(int kept_count) {
  std::vector<std::vector<double>> points;
  std::vector<int> steps(kept_count, 0);
  while (true) {
    int sum = 0;
    for (int v : steps) sum += v;
    if (sum <= 20) {
      std::vector<double> p(kept_count);
      for (int i = 0; i < kept_count; ++i) p[i] = steps[i] / 20.0;
      points.push_back(std::move(p));
    }
    int i = 0;
    while (i < kept_count && steps[i] == 20) steps[i++] = 0;
    if (i == kept_count) break;
    ++steps[i];
  }
  return points;
}

}  // namespace

Polynomial symbolic_coalition_value(const Psmas& ps, const OutcomeSet& outcome,
                                    Coalition coalition, RespMode mode,
                                    StateId from) {
  const Game& game = ps.skeleton;
  Coalition everyone = Coalition::all(game.num_agents());
  if (ps.parametrized != everyone)
    throw Error("symbolic coalition values require every agent parametrized");
  if (!coalition.subset_of(everyone))
    throw AgentNotInScope("coalition names agents outside the game");
  StateId start = resolve_from(game, from);

  Polynomial full = symbolic_sat_probability(ps, outcome, start);

  // Pure stationary responses of the complement, as 0/1 substitutions into
  // the free variables of each of its mixing slots.
  Coalition adversary = coalition.complement(game.num_agents());
  std::vector<VarSlot> adv_slots;
  for (const VarSlot& slot : slots_of(ps))
    if (adversary.contains(slot.agent)) adv_slots.push_back(slot);

  std::vector<Polynomial> candidates;
  std::vector<int> choice(adv_slots.size(), 0);
  while (true) {
    Polynomial cand = full;
    for (size_t i = 0; i < adv_slots.size(); ++i) {
      const VarSlot& slot = adv_slots[i];
      for (size_t pos = 0; pos < slot.kept.size(); ++pos)
        cand = cand.substitute(ps.variables[slot.kept[pos]],
                               (int)pos == choice[i] ? 1.0 : 0.0);
    }
    if (std::find(candidates.begin(), candidates.end(), cand) ==
        candidates.end())
      candidates.push_back(std::move(cand));
    size_t i = 0;
    while (i < adv_slots.size() && choice[i] == adv_slots[i].arity - 1)
      choice[i++] = 0;
    if (i == adv_slots.size()) break;
    ++choice[i];
  }

  // Sample the coalition's free parameters: slots whose variables appear in
  // some candidate, on a per-slot simplex grid, capped for the product.
  std::set<int> present;
  for (const Polynomial& cand : candidates)
    for (const auto& [exps, c] : cand.terms())
      for (size_t i = 0; i < exps.size(); ++i)
        if (exps[i] != 0) present.insert((int)i);
  std::vector<VarSlot> free_slots;
  for (const VarSlot& slot : slots_of(ps)) {
    if (!coalition.contains(slot.agent)) continue;
    bool used = false;
    for (int idx : slot.kept) used = used || present.count(idx);
    if (used) free_slots.push_back(slot);
  }

  std::vector<std::vector<std::vector<double>>> grids;
  long long total_points = 1;
  for (const VarSlot& slot : free_slots) {
    grids.push_back(slot_grid((int)slot.kept.size()));
    total_points *= (long long)grids.back().size();
  }
  const long long cap = 441;
  long long stride = total_points > cap ? (total_points + cap - 1) / cap : 1;

  std::vector<std::vector<double>> points;
  for (long long flat = 0; flat < total_points; flat += stride) {
    std::vector<double> point(ps.variables.size(), 0.0);
    long long rem = flat;
    for (size_t g = 0; g < free_slots.size(); ++g) {
      const auto& grid = grids[g];
      const auto& vals = grid[rem % (long long)grid.size()];
      rem /= (long long)grid.size();
      for (size_t pos = 0; pos < free_slots[g].kept.size(); ++pos)
        point[free_slots[g].kept[pos]] = vals[pos];
    }
    points.push_back(std::move(point));
  }

  const bool minimize = (mode == RespMode::Min);
  int chosen = -1;
  for (size_t c = 0; c < candidates.size() && chosen < 0; ++c) {
    bool dominates = true;
    for (const auto& point : points) {
      double mine = candidates[c].eval(point);
      for (size_t o = 0; o < candidates.size() && dominates; ++o) {
        double theirs = candidates[o].eval(point);
        if (minimize ? mine > theirs + kAdmTol : mine < theirs - kAdmTol)
          dominates = false;
      }
      if (!dominates) break;
    }
    if (dominates) chosen = (int)c;
  }
  if (chosen < 0)
    throw NonPolynomial(
        "no single pure response is extremal across the parameter region "
        "for coalition value at " + game.state_name(start));

  // Numeric cross-check: stationary responses might all be beaten by a
  // step-indexed adversary, which the grid cannot see.
  OptDir dir = minimize ? OptDir::Min : OptDir::Max;
  size_t checks = std::min<size_t>(points.size(), 5);
  size_t step = checks > 0 ? std::max<size_t>(points.size() / checks, 1) : 1;
  for (size_t i = 0; i < points.size(); i += step) {
    Evaluation eval;
    for (const VarSlot& slot : slots_of(ps)) {
      const auto& avail = game.available(slot.state, slot.agent);
      for (size_t pos = 0; pos < slot.kept.size(); ++pos) {
        double fallback = 1.0 / slot.arity;
        double v = points[i][slot.kept[pos]];
        bool assigned = false;
        for (const VarSlot& fs : free_slots)
          if (fs.agent == slot.agent && fs.state == slot.state) assigned = true;
        eval[param_name(game, slot.agent, slot.state, avail[pos])] =
            assigned ? v : fallback;
      }
    }
    StrategyProfile fixed = profile_of(ps, eval).restricted(coalition);
    double numeric =
        extremal_probability(game, fixed, outcome, dir, start).value;
    double symbolic = candidates[chosen].eval(points[i]);
    if (std::fabs(numeric - symbolic) > 1e-7)
      throw NonPolynomial(
          "stationary responses do not realize the extremal value at a "
          "sampled point (step-dependent adversary)");
  }
  return candidates[chosen];
}

Polynomial symbolic_responsibility(const Psmas& ps, const PathFormula& f,
                                   AgentId agent, RespMode mode, StateId from) {
  const Game& game = ps.skeleton;
  if (agent < 0 || agent >= game.num_agents())
    throw UnknownIdentifier("agent index out of range: " + std::to_string(agent));
  OutcomeSet outcome = resolve_outcome(game, f);
  Coalition everyone = Coalition::all(game.num_agents());

  std::map<uint32_t, Polynomial> values;
  auto value_of = [&](Coalition c) -> const Polynomial& {
    auto it = values.find(c.mask());
    if (it == values.end())
      it = values
               .emplace(c.mask(),
                        symbolic_coalition_value(ps, outcome, c, mode, from))
               .first;
    return it->second;
  };

  int n = game.num_agents();
  double n_fact = 1;
  for (int i = 2; i <= n; ++i) n_fact *= i;

  Polynomial degree(ps.variables);
  uint32_t others = everyone.without(agent).mask();
  uint32_t sub = 0;
  while (true) {
    Coalition j(sub);
    double j_fact = 1, rest_fact = 1;
    for (int i = 2; i <= j.size(); ++i) j_fact *= i;
    for (int i = 2; i <= n - j.size() - 1; ++i) rest_fact *= i;
    double weight = j_fact * rest_fact / n_fact;
    degree = degree + (value_of(j.with(agent)) - value_of(j)) * weight;
    if (sub == others) break;
    sub = (sub - others) & others;
  }
  return degree;
}

std::vector<UtilityFunction> make_utilities(
    const Psmas& ps, double lambda, const std::vector<RewardStructure>& rewards,
    const PathFormula& outcome, RespMode mode,
    const std::map<AgentId, Polynomial>& overrides) {
  if (!std::isfinite(lambda)) throw Error("lambda must be finite");
  std::vector<AgentId> members = parametrized_members(ps);
  if (rewards.size() != 1 && rewards.size() != members.size())
    throw Error("expected one reward structure, or one per parametrized agent");

  // Payoffs accumulate over every length-k history, so the reward formula
  // is the always-satisfied one with the outcome's horizon.
  PathFormulaPtr all_paths = make_always(horizon(outcome), make_true());

  std::vector<UtilityFunction> result;
  for (size_t idx = 0; idx < members.size(); ++idx) {
    AgentId agent = members[idx];
    UtilityFunction u;
    u.agent = agent;
    u.lambda = lambda;
    auto ov = overrides.find(agent);
    if (ov != overrides.end()) {
      if (ov->second.variables() != ps.variables)
        throw Error("override polynomial is over different variables");
      u.payoff = ov->second;
      u.responsibility = Polynomial(ps.variables);
      u.combined = ov->second;
    } else {
      const RewardStructure& reward =
          rewards.size() == 1 ? rewards[0] : rewards[idx];
      u.payoff = symbolic_expected_payoff(ps, reward, *all_paths);
      u.responsibility = lambda == 0.0
                             ? Polynomial(ps.variables)
                             : symbolic_responsibility(ps, outcome, agent, mode);
      u.combined = u.payoff - u.responsibility * lambda;
    }
    result.push_back(std::move(u));
  }
  return result;
}

NeProblem ne_problem(const Psmas& ps, std::vector<UtilityFunction> utilities,
                     int horizon) {
  if (horizon < 1) throw Error("horizon must be at least 1");
  const Game& game = ps.skeleton;

  // Decisions taken at step t influence a length-k history only for t < k.
  std::vector<char> decision(game.num_states(), 0);
  std::vector<char> frontier(game.num_states(), 0);
  frontier[game.initial_state()] = 1;
  for (int t = 0; t < horizon; ++t) {
    std::vector<char> next(game.num_states(), 0);
    for (StateId s = 0; s < game.num_states(); ++s) {
      if (!frontier[s]) continue;
      decision[s] = 1;
      for (size_t j = 0; j < game.joint_actions(s).size(); ++j)
        for (const auto& entry : game.transition(s, (int)j))
          next[entry.state] = 1;
    }
    frontier = std::move(next);
  }

  NeProblem problem;
  problem.game = &ps.skeleton;
  problem.psmas = &ps;
  problem.variables = ps.variables;
  problem.reported = ps.all_params;
  for (const UtilityFunction& u : utilities)
    if (u.combined.variables() != ps.variables)
      throw Error("utility polynomial is over different variables");
  problem.utilities = std::move(utilities);

  for (AgentId a : parametrized_members(ps)) {
    bool has_utility = false;
    for (const UtilityFunction& u : problem.utilities)
      if (u.agent == a) has_utility = true;
    for (StateId s = 0; s < game.num_states(); ++s) {
      if (!decision[s]) continue;
      const auto& avail = game.available(s, a);
      if (avail.size() < 2) continue;
      if (!has_utility)
        throw Error("no utility for agent " + game.agent_name(a));
      DecisionGroup group;
      group.agent = a;
      group.state = s;
      group.actions = avail;
      for (size_t pos = 0; pos + 1 < avail.size(); ++pos)
        group.vars.push_back(param_name(game, a, s, avail[pos]));
      problem.groups.push_back(std::move(group));
    }
  }
  return problem;
}

UtilityOverride parse_utility_overrides(const Game& game,
                                        const std::string& text) {
  UtilityOverride ov;
  std::vector<std::pair<int, std::string>> utility_lines;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    std::istringstream ls(line);
    std::string keyword;
    if (!(ls >> keyword)) continue;
    if (keyword == "param") {
      std::string name, eq, agent, state, action;
      if (!(ls >> name >> eq >> agent >> state >> action) || eq != "=")
        throw SyntaxError(line_no, "expected `param <name> = <agent> <state> <action>`");
      UtilityOverride::ParamDecl decl;
      decl.name = name;
      decl.agent = game.agent_id(agent);
      decl.state = game.state_id(state);
      decl.action = game.action_id(decl.agent, action);
      for (const auto& other : ov.params) {
        if (other.name == decl.name)
          throw SyntaxError(line_no, "duplicate parameter name " + name);
        if (other.agent == decl.agent && other.state == decl.state &&
            other.action == decl.action)
          throw SyntaxError(line_no, "duplicate parameter for " + agent + " " +
                                         state + " " + action);
      }
      ov.params.push_back(std::move(decl));
    } else if (keyword == "u") {
      std::string agent, eq;
      if (!(ls >> agent >> eq) || eq != "=")
        throw SyntaxError(line_no, "expected `u <agent> = <polynomial>`");
      std::string poly_text;
      std::getline(ls, poly_text);
      utility_lines.emplace_back(line_no, agent + "\n" + poly_text);
    } else {
      throw SyntaxError(line_no, "unknown keyword " + keyword);
    }
  }

  std::vector<std::string> vars;
  for (const auto& decl : ov.params) vars.push_back(decl.name);
  for (const auto& [ln, packed] : utility_lines) {
    size_t split = packed.find('\n');
    std::string agent_name = packed.substr(0, split);
    AgentId agent = game.agent_id(agent_name);
    for (const auto& u : ov.utilities)
      if (u.agent == agent)
        throw SyntaxError(ln, "duplicate utility for " + agent_name);
    UtilityFunction u;
    u.agent = agent;
    try {
      u.payoff = parse_polynomial(packed.substr(split + 1), vars);
    } catch (const Error& e) {
      throw SyntaxError(ln, e.what());
    }
    u.responsibility = Polynomial(vars);
    u.combined = u.payoff;
    ov.utilities.push_back(std::move(u));
  }
  return ov;
}

NeProblem ne_problem_from_override(const Game& game, const UtilityOverride& ov) {
  if (ov.params.empty()) throw Error("utility override declares no parameters");
  NeProblem problem;
  problem.game = &game;
  for (const auto& decl : ov.params) problem.variables.push_back(decl.name);
  problem.reported = problem.variables;

  // Group declarations by (agent, state), keeping declaration order; the
  // one undeclared action becomes the complement.
  for (const auto& decl : ov.params) {
    DecisionGroup* group = nullptr;
    for (auto& g : problem.groups)
      if (g.agent == decl.agent && g.state == decl.state) group = &g;
    if (!group) {
      problem.groups.emplace_back();
      group = &problem.groups.back();
      group->agent = decl.agent;
      group->state = decl.state;
    }
    group->actions.push_back(decl.action);
    group->vars.push_back(decl.name);
  }
  for (auto& group : problem.groups) {
    const auto& avail = game.available(group.state, group.agent);
    std::vector<ActionId> undeclared;
    for (ActionId a : avail)
      if (std::find(group.actions.begin(), group.actions.end(), a) ==
          group.actions.end())
        undeclared.push_back(a);
    if (undeclared.size() != 1)
      throw Error("parameters for " + game.agent_name(group.agent) + " at " +
                  game.state_name(group.state) +
                  " must cover all available actions except one");
    group.actions.push_back(undeclared[0]);
  }

  problem.utilities = ov.utilities;
  for (const auto& group : problem.groups) {
    bool found = false;
    for (const auto& u : problem.utilities)
      if (u.agent == group.agent) found = true;
    if (!found)
      throw Error("no utility for agent " + game.agent_name(group.agent));
  }
  for (const auto& u : problem.utilities)
    if (u.combined.variables() != problem.variables)
      throw Error("utility polynomial is over different variables");
  return problem;
}

namespace {

// Uniform-share default for every variable; group variables may be
// overridden by the solver, the rest cannot influence any utility.
std::map<std::string, double> baseline_values(const NeProblem& problem) {
  std::map<std::string, double> base;
  if (problem.psmas) {
    const Psmas& ps = *problem.psmas;
    for (const VarSlot& slot : slots_of(ps))
      for (int idx : slot.kept)
        base[ps.variables[idx]] = 1.0 / slot.arity;
  }
  for (const auto& group : problem.groups)
    for (const auto& var : group.vars)
      base[var] = 1.0 / group.actions.size();
  for (const auto& var : problem.variables)
    if (!base.count(var)) base[var] = 0.0;
  return base;
}

std::vector<const DecisionGroup*> groups_of(const NeProblem& problem,
                                            AgentId agent) {
  std::vector<const DecisionGroup*> own;
  for (const auto& group : problem.groups)
    if (group.agent == agent) own.push_back(&group);
  return own;
}

const UtilityFunction& utility_of(const NeProblem& problem, AgentId agent) {
  for (const auto& u : problem.utilities)
    if (u.agent == agent) return u;
  throw Error("no utility for agent id " + std::to_string(agent));
}

// Completes solver variables into reportable parameters.
Evaluation reported_params(const NeProblem& problem,
                           const std::map<std::string, double>& values) {
  Evaluation eval;
  for (const auto& var : problem.variables) eval[var] = values.at(var);
  if (problem.psmas) return complete_evaluation(*problem.psmas, eval);
  return eval;
}

}  // namespace

BestResponse best_response(const NeProblem& problem, AgentId agent,
                           const Evaluation& fixed) {
  const UtilityFunction& u = utility_of(problem, agent);
  std::vector<const DecisionGroup*> own = groups_of(problem, agent);

  std::set<std::string> own_vars;
  for (const auto* group : own)
    for (const auto& var : group->vars) own_vars.insert(var);

  std::vector<double> point(problem.variables.size());
  for (size_t i = 0; i < problem.variables.size(); ++i) {
    const std::string& var = problem.variables[i];
    if (own_vars.count(var)) continue;
    auto it = fixed.find(var);
    if (it == fixed.end()) throw MissingParameter(var);
    point[i] = it->second;
  }
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < problem.variables.size(); ++i)
    index[problem.variables[i]] = i;

  BestResponse best;
  best.value = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<Evaluation, double>> all;

  std::vector<int> choice(own.size(), 0);
  while (true) {
    Evaluation pure;
    for (size_t g = 0; g < own.size(); ++g)
      for (size_t pos = 0; pos < own[g]->vars.size(); ++pos) {
        double v = ((int)pos == choice[g]) ? 1.0 : 0.0;
        pure[own[g]->vars[pos]] = v;
        point[index[own[g]->vars[pos]]] = v;
      }
    double value = u.combined.eval(point);
    all.emplace_back(std::move(pure), value);
    best.value = std::max(best.value, value);

    size_t g = 0;
    while (g < own.size() && choice[g] == (int)own[g]->actions.size() - 1)
      choice[g++] = 0;
    if (g == own.size()) break;
    ++choice[g];
  }
  for (auto& [pure, value] : all)
    if (value >= best.value - 1e-9) best.pure.push_back(std::move(pure));
  return best;
}

bool verify_ne(const NeProblem& problem, const Evaluation& eval, double eps) {
  std::vector<double> point = point_of(problem.variables, eval);
  for (const auto& u : problem.utilities) {
    double current = u.combined.eval(point);
    BestResponse br = best_response(problem, u.agent, eval);
    if (br.value - current > eps) return false;
  }
  return true;
}

namespace {

// Dense square linear solve with partial pivoting; false when singular.
bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                  std::vector<double>& out) {
  size_t n = b.size();
  for (size_t col = 0; col < n; ++col) {
    size_t pivot = col;
    for (size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    if (std::fabs(a[pivot][col]) < 1e-14) return false;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (size_t r = col + 1; r < n; ++r) {
      double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  out.assign(n, 0.0);
  for (size_t ri = n; ri-- > 0;) {
    double sum = b[ri];
    for (size_t c = ri + 1; c < n; ++c) sum -= a[ri][c] * out[c];
    out[ri] = sum / a[ri][ri];
  }
  return true;
}

// Compositions of `total` into `parts` nonnegative integers, lexicographic.
void compositions(int total, int parts, std::vector<int>& current,
                  std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    current.push_back(total);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int head = 0; head <= total; ++head) {
    current.push_back(head);
    compositions(total - head, parts - 1, current, out);
    current.pop_back();
  }
}

struct PatternSystem {
  std::vector<size_t> unknowns;        // indices into problem.variables
  std::vector<Polynomial> equations;   // over problem.variables
  bool inconsistent = false;           // some equation is a nonzero constant
  bool degenerate = false;             // some indifference identity dropped
};

}  // namespace

std::vector<NeSolution> solve_ne(const NeProblem& problem) {
  const std::map<std::string, double> base = baseline_values(problem);
  std::map<std::string, size_t> var_index;
  for (size_t i = 0; i < problem.variables.size(); ++i)
    var_index[problem.variables[i]] = i;

  // Support subsets per group: non-empty action position subsets ordered by
  // size then lexicographically, so pure supports come first and win
  // deduplication against boundary mixed solutions.
  std::vector<std::vector<std::vector<int>>> supports(problem.groups.size());
  for (size_t g = 0; g < problem.groups.size(); ++g) {
    int m = (int)problem.groups[g].actions.size();
    std::vector<std::vector<int>> subsets;
    for (uint32_t mask = 1; mask < (1u << m); ++mask) {
      std::vector<int> subset;
      for (int pos = 0; pos < m; ++pos)
        if ((mask >> pos) & 1) subset.push_back(pos);
      subsets.push_back(std::move(subset));
    }
    std::sort(subsets.begin(), subsets.end(),
              [](const std::vector<int>& a, const std::vector<int>& b) {
                if (a.size() != b.size()) return a.size() < b.size();
                return a < b;
              });
    supports[g] = std::move(subsets);
  }

  std::vector<NeSolution> solutions;
  std::vector<std::vector<double>> accepted_points;
  bool any_converged = false;
  bool numeric_failure = false;

  std::vector<size_t> pattern(problem.groups.size(), 0);
  while (true) {
    // --- Build the square system for this support pattern. ---
    PatternSystem sys;
    std::map<std::string, double> pinned;  // out-of-support variables -> 0
    for (size_t g = 0; g < problem.groups.size(); ++g) {
      const DecisionGroup& group = problem.groups[g];
      const std::vector<int>& sup = supports[g][pattern[g]];
      std::vector<char> in(group.actions.size(), 0);
      for (int pos : sup) in[pos] = 1;
      for (size_t pos = 0; pos < group.vars.size(); ++pos) {
        if (in[pos])
          sys.unknowns.push_back(var_index.at(group.vars[pos]));
        else
          pinned[group.vars[pos]] = 0.0;
      }
    }

    auto restrict = [&](Polynomial p) {
      for (const auto& [var, v] : pinned) p = p.substitute(var, v);
      return p;
    };

    for (size_t g = 0; g < problem.groups.size() && !sys.inconsistent; ++g) {
      const DecisionGroup& group = problem.groups[g];
      const std::vector<int>& sup = supports[g][pattern[g]];
      int eliminated_pos = (int)group.actions.size() - 1;

      bool eliminated_in = sup.back() == eliminated_pos;
      if (!eliminated_in) {
        Polynomial sum(problem.variables);
        for (int pos : sup)
          sum = sum + Polynomial::variable(problem.variables, group.vars[pos]);
        sys.equations.push_back(sum - Polynomial::constant(problem.variables, 1.0));
      }

      if (sup.size() < 2) continue;
      const Polynomial& combined = utility_of(problem, group.agent).combined;
      auto pure_at = [&](int pos) {
        Polynomial p = combined;
        for (size_t q = 0; q < group.vars.size(); ++q)
          p = p.substitute(group.vars[q], (int)q == pos ? 1.0 : 0.0);
        return p;
      };
      Polynomial first = pure_at(sup[0]);
      for (size_t j = 1; j < sup.size(); ++j) {
        Polynomial eq = restrict(first - pure_at(sup[j]));
        if (eq.is_zero()) {
          // Identity: the two actions are always interchangeable; pin a
          // representative uniform share instead.
          sys.degenerate = true;
          int pin_pos = sup[j] < (int)group.vars.size() ? sup[j] : sup[0];
          sys.equations.push_back(
              Polynomial::variable(problem.variables, group.vars[pin_pos]) -
              Polynomial::constant(problem.variables, 1.0 / sup.size()));
        } else if (eq.is_constant()) {
          sys.inconsistent = true;
          break;
        } else {
          sys.equations.push_back(std::move(eq));
        }
      }
    }

    if (!sys.inconsistent) {
      size_t n = sys.unknowns.size();

      // --- Seed grid: per-group 0.1-step simplex points, capped product. ---
      std::vector<std::vector<std::vector<int>>> seed_grids;
      long long total_seeds = 1;
      for (size_t g = 0; g < problem.groups.size(); ++g) {
        std::vector<std::vector<int>> comps;
        std::vector<int> scratch;
        compositions(10, (int)supports[g][pattern[g]].size(), scratch, comps);
        total_seeds *= (long long)comps.size();
        seed_grids.push_back(std::move(comps));
      }
      const long long seed_cap = 2048;
      long long stride =
          total_seeds > seed_cap ? (total_seeds + seed_cap - 1) / seed_cap : 1;

      double best_residual = std::numeric_limits<double>::infinity();

      for (long long flat = 0; flat < total_seeds; flat += stride) {
        // Decode one seed: shares/10 across each group's support.
        std::vector<double> values(problem.variables.size());
        for (size_t i = 0; i < problem.variables.size(); ++i)
          values[i] = base.at(problem.variables[i]);
        for (const auto& [var, v] : pinned) values[var_index.at(var)] = v;
        long long rem = flat;
        for (size_t g = 0; g < problem.groups.size(); ++g) {
          const auto& comps = seed_grids[g];
          const std::vector<int>& comp = comps[rem % (long long)comps.size()];
          rem /= (long long)comps.size();
          const DecisionGroup& group = problem.groups[g];
          const std::vector<int>& sup = supports[g][pattern[g]];
          for (size_t k = 0; k < sup.size(); ++k)
            if (sup[k] < (int)group.vars.size())
              values[var_index.at(group.vars[sup[k]])] = comp[k] / 10.0;
        }

        std::vector<double> x(n);
        for (size_t i = 0; i < n; ++i) x[i] = values[sys.unknowns[i]];

        auto eval_f = [&](const std::vector<double>& xs) {
          std::vector<double> point = values;
          for (size_t i = 0; i < n; ++i) point[sys.unknowns[i]] = xs[i];
          std::vector<double> f(sys.equations.size());
          for (size_t e = 0; e < sys.equations.size(); ++e)
            f[e] = sys.equations[e].eval(point);
          return f;
        };
        auto norm_inf = [](const std::vector<double>& f) {
          double m = 0;
          for (double v : f) m = std::max(m, std::fabs(v));
          return m;
        };

        std::vector<double> f = eval_f(x);
        double fnorm = norm_inf(f);
        bool converged = fnorm < 1e-10;
        for (int iter = 0; iter < 1000 && !converged; ++iter) {
          // Numerical Jacobian, central differences.
          const double h = 1e-6;
          std::vector<std::vector<double>> jac(n, std::vector<double>(n));
          for (size_t c = 0; c < n; ++c) {
            std::vector<double> hi = x, lo = x;
            hi[c] += h;
            lo[c] -= h;
            std::vector<double> fh = eval_f(hi), fl = eval_f(lo);
            for (size_t r = 0; r < n; ++r)
              jac[r][c] = (fh[r] - fl[r]) / (2 * h);
          }
          std::vector<double> neg_f(n);
          for (size_t r = 0; r < n; ++r) neg_f[r] = -f[r];
          std::vector<double> delta;
          if (!solve_linear(jac, neg_f, delta)) break;

          bool improved = false;
          for (double damp = 1.0; damp > 1e-9; damp *= 0.5) {
            std::vector<double> trial = x;
            for (size_t i = 0; i < n; ++i) trial[i] += damp * delta[i];
            std::vector<double> ft = eval_f(trial);
            double tnorm = norm_inf(ft);
            if (tnorm < fnorm) {
              x = std::move(trial);
              f = std::move(ft);
              fnorm = tnorm;
              improved = true;
              break;
            }
          }
          if (!improved) break;
          converged = fnorm < 1e-10;
        }
        best_residual = std::min(best_residual, fnorm);
        if (!converged) continue;
        any_converged = true;

        // --- Candidate point: filters, then report. ---
        std::vector<double> point = values;
        for (size_t i = 0; i < n; ++i) point[sys.unknowns[i]] = x[i];

        bool ok = true;
        for (size_t g = 0; g < problem.groups.size() && ok; ++g) {
          const DecisionGroup& group = problem.groups[g];
          const std::vector<int>& sup = supports[g][pattern[g]];
          double kept_sum = 0;
          for (const auto& var : group.vars)
            kept_sum += point[var_index.at(var)];
          for (int pos : sup) {
            double prob = pos < (int)group.vars.size()
                              ? point[var_index.at(group.vars[pos])]
                              : 1.0 - kept_sum;
            if (prob < 1e-9) ok = false;  // belongs to a smaller support
          }
          if (kept_sum > 1.0 + kAdmTol) ok = false;
        }
        for (size_t i = 0; i < point.size() && ok; ++i)
          if (point[i] < -kAdmTol || point[i] > 1.0 + kAdmTol) ok = false;
        if (!ok) continue;

        std::map<std::string, double> named;
        for (size_t i = 0; i < problem.variables.size(); ++i)
          named[problem.variables[i]] = point[i];
        Evaluation params = reported_params(problem, named);
        if (problem.psmas && !admissible(*problem.psmas, params).ok) continue;
        if (!verify_ne(problem, named, 1e-6)) continue;

        bool duplicate = false;
        for (const auto& seen : accepted_points) {
          double dist = 0;
          for (size_t i = 0; i < point.size(); ++i)
            dist = std::max(dist, std::fabs(point[i] - seen[i]));
          if (dist <= 1e-6) duplicate = true;
        }
        if (duplicate) continue;
        accepted_points.push_back(point);

        NeSolution sol;
        sol.params = std::move(params);
        for (size_t g = 0; g < problem.groups.size(); ++g) {
          NeSupport sup_entry;
          sup_entry.agent = problem.groups[g].agent;
          sup_entry.state = problem.groups[g].state;
          for (int pos : supports[g][pattern[g]])
            sup_entry.actions.push_back(problem.groups[g].actions[pos]);
          sol.support.push_back(std::move(sup_entry));
        }
        sol.residual = fnorm;
        for (const auto& u : problem.utilities)
          sol.utilities[u.agent] = u.combined.eval(point);
        sol.verified = true;
        sol.degenerate = sys.degenerate;
        solutions.push_back(std::move(sol));
      }

      if (best_residual < 1e-8 && !(best_residual < 1e-10))
        numeric_failure = true;
    }

    size_t g = 0;
    while (g < problem.groups.size() && pattern[g] == supports[g].size() - 1)
      pattern[g++] = 0;
    if (g == problem.groups.size()) break;
    ++pattern[g];
  }

  if (solutions.empty() && numeric_failure && !any_converged)
    throw NoSolutionFound(
        "root finding nearly converged on some support but never reached the "
        "residual threshold");

  std::sort(solutions.begin(), solutions.end(),
            [&](const NeSolution& a, const NeSolution& b) {
              for (const auto& var : problem.variables) {
                double av = a.params.at(var), bv = b.params.at(var);
                if (av != bv) return av < bv;
              }
              return false;
            });
  return solutions;
}

std::vector<NeSolution> solve_ne_numeric(
    const NeProblem& problem,
    const std::function<double(AgentId, const Evaluation&)>& utility) {
  std::vector<AgentId> agents;
  for (const auto& group : problem.groups)
    if (std::find(agents.begin(), agents.end(), group.agent) == agents.end())
      agents.push_back(group.agent);
  std::sort(agents.begin(), agents.end());

  const std::map<std::string, double> base = baseline_values(problem);
  auto params_for = [&](const std::vector<int>& choice) {
    std::map<std::string, double> named;
    for (const auto& var : problem.variables) named[var] = base.at(var);
    for (size_t g = 0; g < problem.groups.size(); ++g)
      for (size_t pos = 0; pos < problem.groups[g].vars.size(); ++pos)
        named[problem.groups[g].vars[pos]] = (int)pos == choice[g] ? 1.0 : 0.0;
    return reported_params(problem, named);
  };

  std::vector<NeSolution> solutions;
  std::vector<int> choice(problem.groups.size(), 0);
  while (true) {
    Evaluation params = params_for(choice);

    // A pure profile is an equilibrium iff it is a best response to itself;
    // deviations only vary the deviator's own groups.
    bool is_ne = true;
    std::map<AgentId, double> utilities;
    for (AgentId agent : agents) {
      double current = utility(agent, params);
      utilities[agent] = current;
      std::vector<size_t> own;
      for (size_t g = 0; g < problem.groups.size(); ++g)
        if (problem.groups[g].agent == agent) own.push_back(g);
      std::vector<int> dev = choice;
      std::function<bool(size_t)> try_dev = [&](size_t gi) {
        if (gi == own.size()) {
          if (dev == choice) return true;
          return utility(agent, params_for(dev)) - current <= 1e-6;
        }
        for (int pos = 0; pos < (int)problem.groups[own[gi]].actions.size();
             ++pos) {
          dev[own[gi]] = pos;
          if (!try_dev(gi + 1)) return false;
        }
        dev[own[gi]] = choice[own[gi]];
        return true;
      };
      if (!try_dev(0)) {
        is_ne = false;
        break;
      }
    }
    if (is_ne) {
      NeSolution sol;
      sol.params = std::move(params);
      for (size_t g = 0; g < problem.groups.size(); ++g) {
        NeSupport sup;
        sup.agent = problem.groups[g].agent;
        sup.state = problem.groups[g].state;
        sup.actions.push_back(problem.groups[g].actions[choice[g]]);
        sol.support.push_back(std::move(sup));
      }
      sol.residual = 0;
      sol.utilities = std::move(utilities);
      sol.verified = true;
      solutions.push_back(std::move(sol));
    }

    size_t g = 0;
    while (g < problem.groups.size() &&
           choice[g] == (int)problem.groups[g].actions.size() - 1)
      choice[g++] = 0;
    if (g == problem.groups.size()) break;
    ++choice[g];
  }
  return solutions;
}

}  // namespace respgames
