#include <doctest.h>

#include "respgames/model_io.hpp"
#include "test_util.hpp"

using namespace respgames;

TEST_CASE("junction fixture parses with profiles and rewards") {
  auto model = testutil::load_junction();
  const Game& g = model.game;
  CHECK(g.num_agents() == 2);
  CHECK(g.num_states() == 3);
  CHECK(g.num_atoms() == 3);
  CHECK(g.state_name(g.initial_state()) == "s0");
  CHECK(model.profiles.count("p_nb") == 1);
  CHECK(model.profiles.count("p_brake") == 1);
  CHECK(model.profiles.count("p_half") == 1);
  CHECK(model.rewards.count("r1") == 1);
  CHECK(model.rewards.count("r2") == 1);

  StateId s0 = g.state_id("s0");
  JointAction bb{g.action_id(0, "b1"), g.action_id(1, "b2")};
  JointAction nbnb{g.action_id(0, "nb1"), g.action_id(1, "nb2")};
  const Distribution& d = g.transition(s0, bb);
  REQUIRE(d.size() == 2);
  CHECK(d[0].prob == 0.12);
  CHECK(d[1].prob == 0.88);

  const RewardStructure& r1 = model.rewards.at("r1");
  CHECK(reward_of(r1, s0, bb) == 3.0);
  CHECK(reward_of(r1, s0, nbnb) == 2.0);
  CHECK(r1.state_reward[g.state_id("s1")] == -3.0);
  const RewardStructure& r2 = model.rewards.at("r2");
  CHECK(reward_of(r2, s0, bb) == 1.0);
  CHECK(reward_of(r2, s0, nbnb) == 3.0);
  CHECK(r2.state_reward[g.state_id("s1")] == -1.0);

  const StrategyProfile& nb = model.profiles.at("p_nb");
  CHECK(nb.full());
  CHECK(nb.at(0).at(s0, 1) == 1.0);  // nb1 is position 1
  CHECK(nb.at(0).at(s0, 0) == 0.0);
  const StrategyProfile& half = model.profiles.at("p_half");
  CHECK(half.at(1).at(s0, 0) == 0.5);
  // Unlisted states fall back to uniform.
  CHECK(half.at(1).at(g.state_id("s1"), 0) == 0.5);
}

TEST_CASE("wildcard transitions expand over availability") {
  auto model = parse_model(
      "agents A B\n"
      "actions A { x y }\n"
      "actions B { z w }\n"
      "state s0 init\n"
      "state s1\n"
      "available s0 B { z }\n"
      "trans s0 (*,*) { s1:1 }\n"
      "trans s1 (*,*) { s1:1 }\n");
  const Game& g = model.game;
  CHECK(g.joint_actions(0).size() == 2);  // x/y times restricted {z}
  CHECK(g.joint_actions(1).size() == 4);
  CHECK(g.transition(0, JointAction{1, 0}).size() == 1);
  CHECK(g.joint_index(0, JointAction{0, 1}) == -1);  // w unavailable at s0
}

TEST_CASE("syntax errors carry line numbers") {
  CHECK_THROWS_AS(parse_model("agents\n"), SyntaxError);
  CHECK_THROWS_AS(parse_model("bogus x\n"), SyntaxError);
  CHECK_THROWS_AS(parse_model("agents A\nactions A { x\n"), SyntaxError);
  try {
    parse_model("agents A\nactions A { x }\nstate s0 init\ntrans s0 (x) { s0:zzz }\n");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("semantic errors are collected with line context") {
  // Unknown state in a transition plus a bad profile distribution.
  std::string text =
      "agents A\n"
      "actions A { x }\n"
      "state s0 init\n"
      "trans s0 (x) { s0:1 }\n"
      "reward r state nosuch 1\n"
      "profile p { A s0 { x:0.5 } }\n";
  try {
    parse_model(text);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.has(Violation::Kind::UnknownIdentifier));
    CHECK(e.has(Violation::Kind::BadStrategy));
    bool has_line5 = false;
    for (const auto& v : e.violations())
      if (v.message.find("line 5") != std::string::npos) has_line5 = true;
    CHECK(has_line5);
  }
}

TEST_CASE("comments and multi-line blocks") {
  auto model = parse_model(
      "# header comment\n"
      "agents A   # trailing comment\n"
      "actions A { x }\n"
      "state s0 init\n"
      "trans s0 (x) {\n"
      "  s0:1\n"
      "}\n");
  CHECK(model.game.num_states() == 1);
}

TEST_CASE("serialization round-trips exactly") {
  auto model = testutil::load_junction();
  std::string text = serialize_model(model);
  auto again = parse_model(text);
  CHECK(serialize_model(again) == text);

  // Structural equality of the reparse.
  const Game& a = model.game;
  const Game& b = again.game;
  REQUIRE(a.num_states() == b.num_states());
  for (StateId s = 0; s < a.num_states(); ++s) {
    CHECK(a.state_name(s) == b.state_name(s));
    REQUIRE(a.joint_actions(s).size() == b.joint_actions(s).size());
    for (size_t j = 0; j < a.joint_actions(s).size(); ++j) {
      const Distribution& da = a.transition(s, (int)j);
      const Distribution& db = b.transition(s, (int)j);
      REQUIRE(da.size() == db.size());
      for (size_t e = 0; e < da.size(); ++e) {
        CHECK(da[e].state == db[e].state);
        CHECK(da[e].prob == db[e].prob);  // bitwise: shortest round-trip text
      }
    }
  }
  REQUIRE(again.profiles.size() == model.profiles.size());
  for (const auto& [name, prof] : model.profiles) {
    const StrategyProfile& other = again.profiles.at(name);
    for (AgentId ag = 0; ag < a.num_agents(); ++ag)
      for (StateId s = 0; s < a.num_states(); ++s)
        for (int k = 0; k < (int)a.available(s, ag).size(); ++k)
          CHECK(prof.at(ag).at(s, k) == other.at(ag).at(s, k));
  }
}

TEST_CASE("random models survive a serialize/parse/serialize cycle") {
  testutil::Rng rng(7002);
  for (int it = 0; it < 25; ++it) {
    Game g = testutil::random_game(rng, {.restrict_availability = true});
    ParsedModel m{std::move(g), {}, {}};
    m.profiles.emplace("p", testutil::random_profile(m.game, rng));
    std::string text = serialize_model(m);
    ParsedModel back = parse_model(text);
    CHECK(serialize_model(back) == text);
  }
}

TEST_CASE("format_double prints shortest round-trip form") {
  CHECK(format_double(0.12) == "0.12");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-3.0) == "-3");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
}
