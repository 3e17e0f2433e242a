#include <doctest.h>

#include "respgames/matrix_game.hpp"
#include "respgames/prob_engine.hpp"
#include "test_util.hpp"

using namespace respgames;
using testutil::load_junction;

namespace {

PathFormulaPtr pf(const std::string& text) { return parse_path_formula(text); }

std::vector<PathFormulaPtr> one(const std::string& text) { return {pf(text)}; }

// History-tree reference for robust_expected_reward: recursion on the full
// prefix (no state/code/reward merging), hostile nodes solved as matrix
// games over the joint choices, cooperative nodes by joint optimization.
double oracle_robust(const Game& game, Coalition coalition, const RewardStructure& r,
                     const std::vector<PathFormulaPtr>& alts, OptDir dir,
                     AdversaryMode adv_mode) {
  int H = testutil::max_horizon(alts);
  bool maximize = dir == OptDir::Max;
  std::vector<StateId> states = {game.initial_state()};
  std::vector<AgentId> own = coalition.members();

  std::function<double(double)> rec = [&](double acc) -> double {
    if ((int)states.size() == H + 1)
      return testutil::any_holds(game, states, alts)
                 ? acc + r.state_reward[states.back()]
                 : 0.0;
    StateId s = states.back();
    std::map<std::vector<ActionId>, std::map<std::vector<ActionId>, double>> cells;
    for (const JointAction& ja : game.joint_actions(s)) {
      std::vector<ActionId> mine, theirs;
      for (AgentId a = 0; a < game.num_agents(); ++a)
        (coalition.contains(a) ? mine : theirs).push_back(ja[a]);
      double e = 0;
      double cost = reward_of(r, s, ja);
      for (const auto& tr : game.transition(s, ja)) {
        states.push_back(tr.state);
        e += tr.prob * rec(acc + cost);
        states.pop_back();
      }
      cells[mine][theirs] = e;
    }
    if (adv_mode == AdversaryMode::Any) {
      bool first = true;
      double best = 0;
      for (const auto& [mine, row] : cells)
        for (const auto& [theirs, e] : row) {
          if (first || (maximize ? e > best : e < best)) best = e;
          first = false;
        }
      return best;
    }
    std::vector<std::vector<double>> m;
    for (const auto& [mine, row] : cells) {
      m.emplace_back();
      for (const auto& [theirs, e] : row) m.back().push_back(maximize ? e : -e);
    }
    double v = matrix_game_value(m).value;
    return maximize ? v : -v;
  };
  return rec(0.0);
}

}  // namespace

TEST_CASE("junction satisfaction probabilities") {
  auto model = load_junction();
  const Game& g = model.game;
  OutcomeSet crash = resolve_outcome(g, *pf("X \"crash\""));

  CHECK(sat_probability(g, model.profiles.at("p_nb"), crash) == 1.0);
  CHECK(sat_probability(g, model.profiles.at("p_brake"), crash) ==
        doctest::Approx(0.12).epsilon(1e-12));
  CHECK(sat_probability(g, model.profiles.at("p_half"), crash) ==
        doctest::Approx(0.48).epsilon(1e-12));

  OutcomeSet crash2 = resolve_outcome(g, *pf("F<=2 \"crash\""));
  CHECK(sat_probability(g, model.profiles.at("p_brake"), crash2) ==
        doctest::Approx(0.12).epsilon(1e-12));

  StrategyProfile partial = model.profiles.at("p_nb").restricted(Coalition::of({0}));
  CHECK_THROWS_AS(sat_probability(g, partial, crash), PartialProfile);
}

TEST_CASE("sat_probability equals exhaustive path enumeration") {
  testutil::Rng rng(7010);
  for (int it = 0; it < 60; ++it) {
    Game g = testutil::random_game(rng, {.restrict_availability = true});
    StrategyProfile p = testutil::random_profile(g, rng);
    std::vector<PathFormulaPtr> alts;
    std::string a0 = g.atom_name(0), a1 = g.atom_name(1);
    switch (it % 4) {
      case 0:
        alts = one("X \"" + a0 + "\"");
        break;
      case 1:
        alts = one("F<=3 \"" + a0 + "\"");
        break;
      case 2:
        alts = one("\"" + a0 + "\" U<=2 \"" + a1 + "\"");
        break;
      default:
        alts = {pf("G<=2 !\"" + a0 + "\""), pf("X \"" + a1 + "\"")};
        break;
    }
    OutcomeSet out = resolve_outcome(g, alts);
    double dp = sat_probability(g, p, out);
    double brute = testutil::oracle_sat(g, p, alts);
    CHECK(std::abs(dp - brute) < 1e-12);
  }
}

TEST_CASE("junction extremal probabilities reproduce the coalition values") {
  auto model = load_junction();
  const Game& g = model.game;
  OutcomeSet crash = resolve_outcome(g, *pf("X \"crash\""));
  const StrategyProfile& nb = model.profiles.at("p_nb");

  auto v = [&](Coalition c) {
    return extremal_probability(g, nb.restricted(c), crash, OptDir::Min).value;
  };
  CHECK(v(Coalition::of({0, 1})) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v(Coalition::of({0})) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(v(Coalition::of({1})) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(v(Coalition()) == doctest::Approx(0.12).epsilon(1e-12));

  // A2 fixed to brake, adversary A1 minimizes: brake is its best reply.
  StrategyProfile brake2 = model.profiles.at("p_brake").restricted(Coalition::of({1}));
  CHECK(extremal_probability(g, brake2, crash, OptDir::Min).value ==
        doctest::Approx(0.12).epsilon(1e-12));
  // Everyone adversarial, maximizing: not-braking forces the crash.
  StrategyProfile empty(g.num_agents());
  CHECK(extremal_probability(g, empty, crash, OptDir::Max).value == 1.0);
}

TEST_CASE("extremal witness and per-state values") {
  auto model = load_junction();
  const Game& g = model.game;
  OutcomeSet crash = resolve_outcome(g, *pf("X \"crash\""));
  StrategyProfile empty(g.num_agents());
  ExtremalResult res = extremal_probability(g, empty, crash, OptDir::Min);
  CHECK(res.value_at[g.state_id("s1")] == 1.0);  // self-loop keeps crash next
  CHECK(res.value_at[g.state_id("s2")] == 0.0);
  CHECK(!res.witness.empty());
  // The recorded decision at (step 0, s0) must be a minimizing joint action.
  bool found = false;
  for (const auto& d : res.witness)
    if (d.step == 0 && d.state == g.state_id("s0")) {
      found = true;
      JointAction ja = d.joint;
      CHECK(g.transition(g.state_id("s0"), ja)[0].prob == 0.12);
    }
  CHECK(found);
}

TEST_CASE("extremal matches the history-tree adversary oracle") {
  testutil::Rng rng(7011);
  for (int it = 0; it < 40; ++it) {
    Game g = testutil::random_game(rng, {.max_states = 3});
    StrategyProfile p = testutil::random_profile(g, rng);
    uint32_t mask =
        std::uniform_int_distribution<uint32_t>(0, (1u << g.num_agents()) - 1)(rng);
    StrategyProfile partial = p.restricted(Coalition(mask));
    std::string a0 = g.atom_name(0), a1 = g.atom_name(1);
    std::vector<PathFormulaPtr> alts =
        it % 2 ? one("F<=2 \"" + a0 + "\"")
               : std::vector<PathFormulaPtr>{pf("X \"" + a1 + "\""),
                                             pf("G<=2 \"" + a0 + "\"")};
    OutcomeSet out = resolve_outcome(g, alts);
    for (OptDir dir : {OptDir::Min, OptDir::Max}) {
      double dp = extremal_probability(g, partial, out, dir).value;
      double brute = testutil::oracle_extremal(g, partial, alts, dir);
      CHECK(dp == doctest::Approx(brute).epsilon(1e-10));
    }
  }
}

TEST_CASE("extremal brackets every completion of the fixed coalition") {
  testutil::Rng rng(7012);
  for (int it = 0; it < 10; ++it) {
    Game g = testutil::random_game(rng);
    StrategyProfile p = testutil::random_profile(g, rng);
    uint32_t mask =
        std::uniform_int_distribution<uint32_t>(0, (1u << g.num_agents()) - 1)(rng);
    StrategyProfile partial = p.restricted(Coalition(mask));
    std::string a0 = g.atom_name(0);
    OutcomeSet out = resolve_outcome(g, *pf("F<=3 \"" + a0 + "\""));
    double lo = extremal_probability(g, partial, out, OptDir::Min).value;
    double hi = extremal_probability(g, partial, out, OptDir::Max).value;
    for (int c = 0; c < 25; ++c) {
      StrategyProfile full = partial;
      for (AgentId a = 0; a < g.num_agents(); ++a)
        if (!full.has(a)) full.set(testutil::random_strategy(g, a, rng));
      double v = sat_probability(g, full, out);
      CHECK(v >= lo - 1e-9);
      CHECK(v <= hi + 1e-9);
    }
  }
}

TEST_CASE("fixing more agents never lowers the adversarial minimum") {
  testutil::Rng rng(7013);
  for (int it = 0; it < 15; ++it) {
    Game g = testutil::random_game(rng);
    StrategyProfile p = testutil::random_profile(g, rng);
    std::string a0 = g.atom_name(0);
    OutcomeSet out = resolve_outcome(g, *pf("F<=2 \"" + a0 + "\""));
    uint32_t all = (1u << g.num_agents()) - 1;
    for (uint32_t sub = 0; sub <= all; ++sub) {
      double vs = extremal_probability(g, p.restricted(Coalition(sub)), out,
                                       OptDir::Min)
                      .value;
      for (uint32_t sup = sub;; sup = (sup + 1) | sub) {
        double vl = extremal_probability(g, p.restricted(Coalition(sup)), out,
                                         OptDir::Min)
                        .value;
        CHECK(vl >= vs - 1e-12);
        if (sup == all) break;
      }
    }
  }
}

TEST_CASE("junction game values") {
  auto model = load_junction();
  const Game& g = model.game;
  OutcomeSet crash = resolve_outcome(g, *pf("X \"crash\""));

  CHECK(game_value_probability(g, Coalition::of({0, 1}), crash, true).value == 1.0);
  CHECK(game_value_probability(g, Coalition::of({0, 1}), crash, false).value ==
        doctest::Approx(0.12).epsilon(1e-12));
  CHECK(game_value_probability(g, Coalition::of({0}), crash, false).value ==
        doctest::Approx(0.2).epsilon(1e-12));
  CHECK(game_value_probability(g, Coalition::of({0}), crash, true).value ==
        doctest::Approx(0.6).epsilon(1e-12));
  CHECK(game_value_probability(g, Coalition(), crash, true).value ==
        doctest::Approx(0.12).epsilon(1e-12));

  OutcomeSet crash2 = resolve_outcome(g, *pf("F<=2 \"crash\""));
  CHECK(game_value_probability(g, Coalition::of({0, 1}), crash2, true).value == 1.0);
  CHECK(game_value_probability(g, Coalition::of({0, 1}), crash2, false).value ==
        doctest::Approx(0.12).epsilon(1e-12));
}

TEST_CASE("game value coincides with extremal in the degenerate coalitions") {
  testutil::Rng rng(7014);
  for (int it = 0; it < 15; ++it) {
    Game g = testutil::random_game(rng);
    std::string a0 = g.atom_name(0);
    OutcomeSet out = resolve_outcome(g, *pf("F<=2 \"" + a0 + "\""));
    StrategyProfile empty(g.num_agents());
    Coalition all = Coalition::all(g.num_agents());
    CHECK(game_value_probability(g, all, out, true).value ==
          doctest::Approx(extremal_probability(g, empty, out, OptDir::Max).value)
              .epsilon(1e-10));
    CHECK(game_value_probability(g, all, out, false).value ==
          doctest::Approx(extremal_probability(g, empty, out, OptDir::Min).value)
              .epsilon(1e-10));
    CHECK(game_value_probability(g, Coalition(), out, true).value ==
          doctest::Approx(extremal_probability(g, empty, out, OptDir::Min).value)
              .epsilon(1e-10));
  }
}

TEST_CASE("game value is sandwiched by stationary commitments") {
  testutil::Rng rng(7015);
  for (int it = 0; it < 10; ++it) {
    Game g = testutil::random_game(rng);
    if (g.num_agents() < 2) continue;
    std::string a0 = g.atom_name(0);
    OutcomeSet out = resolve_outcome(g, *pf("F<=2 \"" + a0 + "\""));
    Coalition c = Coalition::of({0});
    double value = game_value_probability(g, c, out, true).value;
    for (int k = 0; k < 10; ++k) {
      StrategyProfile mine(g.num_agents());
      mine.set(testutil::random_strategy(g, 0, rng));
      // Committing the coalition first can only do worse.
      CHECK(extremal_probability(g, mine, out, OptDir::Min).value <= value + 1e-9);
      StrategyProfile theirs(g.num_agents());
      for (AgentId a = 1; a < g.num_agents(); ++a)
        theirs.set(testutil::random_strategy(g, a, rng));
      // Committing the adversary first can only do better.
      CHECK(extremal_probability(g, theirs, out, OptDir::Max).value >= value - 1e-9);
    }
  }
}

TEST_CASE("junction expected rewards") {
  auto model = load_junction();
  const Game& g = model.game;
  const RewardStructure& r1 = model.rewards.at("r1");
  OutcomeSet tautology = resolve_outcome(g, *pf("X true"));

  CHECK(expected_reward(g, model.profiles.at("p_nb"), r1, tautology) ==
        doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(expected_reward(g, model.profiles.at("p_brake"), r1, tautology) ==
        doctest::Approx(2.64).epsilon(1e-12));
  // Unsatisfiable outcome scores zero everywhere.
  OutcomeSet nothing = resolve_outcome(g, *pf("X false"));
  CHECK(expected_reward(g, model.profiles.at("p_half"), r1, nothing) == 0.0);
}

TEST_CASE("expected reward equals exhaustive enumeration") {
  testutil::Rng rng(7016);
  for (int it = 0; it < 40; ++it) {
    Game g = testutil::random_game(rng);
    StrategyProfile p = testutil::random_profile(g, rng);
    RewardStructure r;
    r.name = "r";
    r.state_reward.resize(g.num_states());
    for (double& v : r.state_reward)
      v = std::uniform_int_distribution<int>(-3, 3)(rng);
    for (AgentId a = 0; a < g.num_agents(); ++a) {
      RewardStructure::ActionRule rule;
      rule.pattern.assign(g.num_agents(), std::nullopt);
      rule.pattern[a] = 0;
      rule.value = std::uniform_int_distribution<int>(-2, 2)(rng);
      r.rules.push_back(rule);
    }
    std::string a0 = g.atom_name(0), a1 = g.atom_name(1);
    std::vector<PathFormulaPtr> alts = it % 2
                                           ? one("F<=2 \"" + a0 + "\"")
                                           : one("\"" + a1 + "\" U<=3 \"" + a0 + "\"");
    OutcomeSet out = resolve_outcome(g, alts);
    double dp = expected_reward(g, p, r, out);
    double brute = testutil::oracle_reward(g, p, r, alts);
    CHECK(dp == doctest::Approx(brute).epsilon(1e-10));
  }
}

TEST_CASE("junction robust rewards") {
  auto model = load_junction();
  const Game& g = model.game;
  const RewardStructure& r1 = model.rewards.at("r1");
  OutcomeSet tautology = resolve_outcome(g, *pf("X true"));
  Coalition both = Coalition::of({0, 1});

  CHECK(robust_expected_reward(g, both, r1, tautology, OptDir::Max,
                               AdversaryMode::Hostile) ==
        doctest::Approx(2.64).epsilon(1e-12));
  // Empty coalition maximizing: the whole world opposes, so the value is
  // the minimum over all profiles.
  CHECK(robust_expected_reward(g, Coalition(), r1, tautology, OptDir::Max,
                               AdversaryMode::Hostile) ==
        doctest::Approx(-1.0).epsilon(1e-12));
  // A1 alone against a hostile A2 settles for braking (2.4); a cooperative
  // A2 brakes too (2.64).
  CHECK(robust_expected_reward(g, Coalition::of({0}), r1, tautology, OptDir::Max,
                               AdversaryMode::Hostile) ==
        doctest::Approx(2.4).epsilon(1e-12));
  CHECK(robust_expected_reward(g, Coalition::of({0}), r1, tautology, OptDir::Max,
                               AdversaryMode::Any) ==
        doctest::Approx(2.64).epsilon(1e-12));

  RewardStructure zero;
  zero.name = "z";
  zero.state_reward.assign(g.num_states(), 0.0);
  CHECK(robust_expected_reward(g, both, zero, tautology, OptDir::Max,
                               AdversaryMode::Hostile) == 0.0);
}

TEST_CASE("robust reward matches the history-tree oracle") {
  testutil::Rng rng(7017);
  for (int it = 0; it < 25; ++it) {
    Game g = testutil::random_game(rng, {.max_states = 3});
    RewardStructure r;
    r.name = "r";
    r.state_reward.resize(g.num_states());
    for (double& v : r.state_reward)
      v = std::uniform_int_distribution<int>(-2, 2)(rng);
    RewardStructure::ActionRule rule;
    rule.pattern.assign(g.num_agents(), std::nullopt);
    rule.pattern[0] = 0;
    rule.value = 1.5;
    r.rules.push_back(rule);
    uint32_t mask =
        std::uniform_int_distribution<uint32_t>(0, (1u << g.num_agents()) - 1)(rng);
    Coalition c(mask);
    std::string a0 = g.atom_name(0);
    std::vector<PathFormulaPtr> alts = one("F<=2 \"" + a0 + "\"");
    OutcomeSet out = resolve_outcome(g, alts);
    for (OptDir dir : {OptDir::Min, OptDir::Max})
      for (AdversaryMode mode : {AdversaryMode::Hostile, AdversaryMode::Any}) {
        double dp = robust_expected_reward(g, c, r, out, dir, mode);
        double brute = oracle_robust(g, c, r, alts, dir, mode);
        CHECK(dp == doctest::Approx(brute).epsilon(1e-9));
      }
  }
}

TEST_CASE("monte carlo is deterministic and consistent") {
  auto model = load_junction();
  const Game& g = model.game;
  OutcomeSet crash = resolve_outcome(g, *pf("X \"crash\""));

  McEstimate sure = monte_carlo_sat(g, model.profiles.at("p_nb"), crash, 2000, 1);
  CHECK(sure.estimate == 1.0);
  CHECK(sure.stderr_ == 0.0);

  McEstimate a = monte_carlo_sat(g, model.profiles.at("p_brake"), crash, 100000, 42);
  McEstimate b = monte_carlo_sat(g, model.profiles.at("p_brake"), crash, 100000, 42);
  CHECK(a.estimate == b.estimate);
  CHECK(a.stderr_ == b.stderr_);
  CHECK(std::abs(a.estimate - 0.12) <= 4 * a.stderr_);

  McEstimate c = monte_carlo_sat(g, model.profiles.at("p_brake"), crash, 100000, 43);
  CHECK(a.estimate != c.estimate);  // different stream

  const RewardStructure& r1 = model.rewards.at("r1");
  OutcomeSet tautology = resolve_outcome(g, *pf("X true"));
  McEstimate rew =
      monte_carlo_reward(g, model.profiles.at("p_half"), r1, tautology, 100000, 7);
  double analytic = expected_reward(g, model.profiles.at("p_half"), r1, tautology);
  CHECK(std::abs(rew.estimate - analytic) <= 4 * rew.stderr_);

  CHECK_THROWS_AS(monte_carlo_sat(g, model.profiles.at("p_nb"), crash, 0, 1), Error);
  StrategyProfile partial = model.profiles.at("p_nb").restricted(Coalition::of({0}));
  CHECK_THROWS_AS(monte_carlo_sat(g, partial, crash, 10, 1), PartialProfile);
}

TEST_CASE("start-state overrides evaluate from other states") {
  auto model = load_junction();
  const Game& g = model.game;
  OutcomeSet crash = resolve_outcome(g, *pf("F<=2 \"crash\""));
  StateId s1 = g.state_id("s1");
  StateId s2 = g.state_id("s2");
  CHECK(sat_probability(g, model.profiles.at("p_brake"), crash, s1) == 1.0);
  CHECK(sat_probability(g, model.profiles.at("p_brake"), crash, s2) == 0.0);
  CHECK(game_value_probability(g, Coalition::of({0, 1}), crash, true, s2).value ==
        0.0);
}
