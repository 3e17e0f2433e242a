#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "respgames/logic.hpp"
#include "respgames/model.hpp"
#include "respgames/polynomial.hpp"
#include "respgames/responsibility.hpp"

namespace respgames {

// Parameter assignment by name.
using Evaluation = std::map<std::string, double>;

// Canonical parameter name for sigma_i(s)(a): "x_<agent>_<state>_<action>".
std::string param_name(const Game& game, AgentId agent, StateId state,
                       ActionId action);

// Game with the parametrized agents' strategy probabilities replaced by
// named parameters, transitions becoming polynomials. Per (agent, state) the
// last available action carries no variable of its own: its factor is
// 1 - sum of the siblings' variables, so polynomials are over free
// parameters only while evaluations still assign every parameter.
struct Psmas {
  Game skeleton;
  Coalition parametrized;
  std::vector<std::string> all_params;  // one per (agent, state, action)
  std::vector<std::string> variables;   // all but the last action per (agent, state)
  // Index into variables per [state][agent][availability position];
  // -1 for eliminated actions and constant agents.
  std::vector<std::vector<std::vector<int>>> var_at;
  StrategyProfile constants;  // strategies of the non-parametrized agents
  // Polynomial per [state][joint index][distribution entry], aligned with
  // skeleton.transition(state, joint index).
  std::vector<std::vector<std::vector<Polynomial>>> trans_poly;

  // sigma_i(s)(available(s,i)[pos]) as a polynomial (variable, complement
  // of the siblings, or constant).
  Polynomial strategy_factor(StateId s, AgentId agent, int pos) const;
};

// Transition polynomial for (s, a, s') = delta(s,a)(s') * prod of the
// parametrized agents' factors; constant agents fold their strategy
// probabilities into the coefficients.
Psmas build_psmas(const Game& game, Coalition parametrized,
                  const StrategyProfile& constants = StrategyProfile());

struct Admissibility {
  bool ok = true;
  std::vector<std::string> violations;
};

// Conditions, all within 1e-9: (1) every transition polynomial evaluates
// into [0,1]; (2) every parameter lies in [0,1]; (3) parameters of each
// (agent, state) sum to 1. Throws MissingParameter on incomplete input.
Admissibility admissible(const Psmas& psmas, const Evaluation& eval);

// Fills in eliminated parameters (1 - sum of siblings) for any that are
// absent; present entries are kept verbatim.
Evaluation complete_evaluation(const Psmas& psmas, const Evaluation& eval);

// Full profile: parametrized agents read their probabilities from the
// evaluation, the rest come from the stored constants.
StrategyProfile profile_of(const Psmas& psmas, const Evaluation& eval);

// Induced chain at the evaluation: a one-agent, one-action game over the
// same states and labels whose distributions merge all joint actions.
// Admissible evaluations always produce a game that validates.
Game substitute(const Psmas& psmas, const Evaluation& eval);

// Sum over satisfying length-k support histories of the product of
// transition polynomials; equals sat_probability at admissible points.
Polynomial symbolic_sat_probability(const Psmas& psmas, const PathFormula& f,
                                    StateId from = -1);
Polynomial symbolic_sat_probability(const Psmas& psmas, const OutcomeSet& outcome,
                                    StateId from = -1);

// Sum over length-k support histories of probability polynomial times
// accumulated reward (final state reward included only when the path
// satisfies the formula); equals expected_reward at admissible points.
Polynomial symbolic_expected_payoff(const Psmas& psmas, const RewardStructure& reward,
                                    const PathFormula& f, StateId from = -1);
Polynomial symbolic_expected_payoff(const Psmas& psmas, const RewardStructure& reward,
                                    const OutcomeSet& outcome, StateId from = -1);

// Closed form of the coalition value: enumerates pure stationary adversary
// responses, keeps the candidate that is pointwise extremal across a
// 21-point-per-parameter admissible grid (ties allowed), and cross-checks
// it numerically. Throws NonPolynomial when no single candidate dominates.
// Requires every agent parametrized.
Polynomial symbolic_coalition_value(const Psmas& psmas, const OutcomeSet& outcome,
                                    Coalition coalition, RespMode mode,
                                    StateId from = -1);

// Shapley combination of the symbolic coalition values over all coalitions.
Polynomial symbolic_responsibility(const Psmas& psmas, const PathFormula& f,
                                   AgentId agent, RespMode mode = RespMode::Min,
                                   StateId from = -1);

struct UtilityFunction {
  AgentId agent = -1;
  Polynomial payoff;
  Polynomial responsibility;
  double lambda = 1.0;
  Polynomial combined;  // payoff - lambda * responsibility, coefficient-wise
};

// One utility per parametrized agent: payoff = expected reward over all
// length-k histories (k from the outcome), responsibility = symbolic bCR
// degree for the outcome. rewards holds one structure per parametrized
// agent in id order, or a single shared structure. An override replaces the
// whole utility verbatim (payoff := polynomial, responsibility := 0).
// lambda = 0 skips the responsibility computation entirely.
std::vector<UtilityFunction> make_utilities(
    const Psmas& psmas, double lambda, const std::vector<RewardStructure>& rewards,
    const PathFormula& outcome, RespMode mode = RespMode::Min,
    const std::map<AgentId, Polynomial>& overrides = {});

// One mixing decision: agent's action distribution at a state. vars has one
// entry per action except the last, whose probability is 1 - sum.
struct DecisionGroup {
  AgentId agent = -1;
  StateId state = -1;
  std::vector<ActionId> actions;
  std::vector<std::string> vars;  // size = actions.size() - 1
};

// Input to the equilibrium solver. Referenced game/psmas must outlive the
// problem. variables spans every utility polynomial; vars outside any group
// are pinned to the uniform share (they cannot affect the utilities).
struct NeProblem {
  const Game* game = nullptr;
  const Psmas* psmas = nullptr;  // when set, solutions must pass admissible()
  std::vector<std::string> variables;
  std::vector<DecisionGroup> groups;
  std::vector<UtilityFunction> utilities;
  // Names included in NeSolution::params; defaults to all group vars plus,
  // for psmas-backed problems, every parameter.
  std::vector<std::string> reported;
};

// Groups cover the parametrized agents' choices at states reachable within
// horizon - 1 steps of the support graph (later decisions cannot influence
// a length-horizon outcome); single-action states carry no group.
NeProblem ne_problem(const Psmas& psmas, std::vector<UtilityFunction> utilities,
                     int horizon);

struct NeSupport {
  AgentId agent = -1;
  StateId state = -1;
  std::vector<ActionId> actions;  // in-support subset, model order
};

struct NeSolution {
  Evaluation params;
  std::vector<NeSupport> support;  // one entry per problem group
  double residual = 0;
  std::map<AgentId, double> utilities;
  bool verified = false;
  // Some indifference identity held for every parameter value, so the
  // solution is one representative of a solution manifold.
  bool degenerate = false;
};

struct BestResponse {
  double value = 0;
  // Pure strategies within 1e-9 of the maximum, as assignments of the
  // agent's own group variables.
  std::vector<Evaluation> pure;
};

// Maximizes the agent's combined utility against fixed opponents. Utilities
// are multilinear in the agent's own per-state parameters, so the maximum
// over the product of simplices is attained at a pure strategy; all pure
// strategies are enumerated.
BestResponse best_response(const NeProblem& problem, AgentId agent,
                           const Evaluation& fixed);

// True iff no agent can improve its utility by more than eps with any pure
// deviation from the evaluation.
bool verify_ne(const NeProblem& problem, const Evaluation& eval,
               double eps = 1e-6);

// Support enumeration + damped Newton on the indifference system of each
// pattern (numerical Jacobian, seeds on a 0.1-step grid, <= 1000 iterations,
// residual < 1e-10). Solutions are filtered for admissibility, in-support
// positivity, and pure-deviation stability (eps = 1e-6), deduplicated within
// 1e-6, and sorted. Indifference identities that hold for every parameter
// value are resolved to the uniform representative and flagged degenerate.
// Throws NoSolutionFound only when every pattern fails numerically despite
// near-convergence; an empty list is a valid outcome.
std::vector<NeSolution> solve_ne(const NeProblem& problem);

// Fallback when utilities have no closed form: utilities are black-box
// functions of complete parameter assignments and only pure candidates are
// searched (each pure profile is an equilibrium iff it is a pure best
// response to itself). Mixed equilibria are out of reach here.
std::vector<NeSolution> solve_ne_numeric(
    const NeProblem& problem,
    const std::function<double(AgentId, const Evaluation&)>& utility);

// Plain-text utility override: `param x1 = A1 s0 b1` declares a parameter,
// `u A1 = 1*x1 + 0.4*x2 - 1.6*x1*x2 - 1` gives an agent's combined utility
// over the declared names. '#' starts a comment.
struct UtilityOverride {
  struct ParamDecl {
    std::string name;
    AgentId agent = -1;
    StateId state = -1;
    ActionId action = -1;
  };
  std::vector<ParamDecl> params;
  std::vector<UtilityFunction> utilities;
};

UtilityOverride parse_utility_overrides(const Game& game, const std::string& text);

// Problem over exactly the declared parameters. At each declared
// (agent, state) the undeclared actions must reduce to a single eliminated
// one so the complement convention applies.
NeProblem ne_problem_from_override(const Game& game, const UtilityOverride& ov);

}  // namespace respgames
