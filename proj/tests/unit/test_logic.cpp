#include <doctest.h>

#include "respgames/logic.hpp"
#include "test_util.hpp"

using namespace respgames;

namespace {

// Random bounded path formula over the game's first two atoms.
PathFormulaPtr random_path_formula(testutil::Rng& rng, const Game& g, int max_bound) {
  auto atom = [&]() -> StateFormulaPtr {
    AtomId a = std::uniform_int_distribution<int>(0, g.num_atoms() - 1)(rng);
    StateFormulaPtr f = make_atom(g.atom_name(a));
    if (std::uniform_int_distribution<int>(0, 2)(rng) == 0) f = make_not(f);
    return f;
  };
  auto state = [&]() -> StateFormulaPtr {
    StateFormulaPtr f = atom();
    if (std::uniform_int_distribution<int>(0, 2)(rng) == 0)
      f = make_and(f, atom());
    return f;
  };
  int bound = std::uniform_int_distribution<int>(0, max_bound)(rng);
  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0:
      return make_next(state());
    case 1:
      return make_until(state(), bound, state());
    case 2:
      return make_eventually(bound, state());
    default:
      return make_always(bound, state());
  }
}

}  // namespace

TEST_CASE("relation tolerance semantics") {
  CHECK(rel_holds(0.5 + 5e-10, Rel::Le, 0.5));
  CHECK(rel_holds(0.5 - 5e-10, Rel::Ge, 0.5));
  CHECK(!rel_holds(0.5 + 5e-10, Rel::Gt, 0.5));
  CHECK(!rel_holds(0.5 - 5e-10, Rel::Lt, 0.5));
  CHECK(rel_holds(0.4, Rel::Lt, 0.5));
  CHECK(rel_holds(0.6, Rel::Gt, 0.5));
  CHECK(!rel_holds(0.6, Rel::Le, 0.5));
  CHECK(!rel_holds(0.4, Rel::Ge, 0.5));
}

TEST_CASE("formula parsing and structure") {
  Formula f = parse_formula("<<A1,A2>> P>=0.5 [X \"crash\"]");
  REQUIRE(f.state);
  CHECK(f.state->kind == StateFormula::Kind::CoalitionP);
  CHECK(f.state->agents == std::vector<std::string>{"A1", "A2"});
  CHECK(f.state->rel == Rel::Ge);
  CHECK(f.state->bound == 0.5);
  CHECK(f.state->path->kind == PathFormula::Kind::Next);
  CHECK(f.state->path->sub->atom == "crash");

  StateFormulaPtr d =
      parse_state_formula("<<A1,A2>> D<=0 [BCR(A1, p_brake, F<=2 \"crash\")]");
  CHECK(d->kind == StateFormula::Kind::CoalitionD);
  CHECK(d->d_agent == "A1");
  CHECK(d->d_profile == "p_brake");
  CHECK(d->rel == Rel::Le);
  CHECK(d->bound == 0.0);
  CHECK(d->path->kind == PathFormula::Kind::Eventually);
  CHECK(d->path->bound == 2);

  StateFormulaPtr r = parse_state_formula("<<A>> R{r1}>2.5 [G<=3 !\"crash\"]");
  CHECK(r->kind == StateFormula::Kind::CoalitionR);
  CHECK(r->reward == "r1");
  CHECK(r->rel == Rel::Gt);
  CHECK(r->bound == 2.5);
  CHECK(r->path->kind == PathFormula::Kind::Always);
  CHECK(r->path->sub->kind == StateFormula::Kind::Not);

  PathFormulaPtr u = parse_path_formula("\"init\" U<=3 \"pass\" & !\"crash\"");
  CHECK(u->kind == PathFormula::Kind::Until);
  CHECK(u->bound == 3);
  CHECK(u->sub->kind == StateFormula::Kind::And);

  CHECK(parse_state_formula("false")->kind == StateFormula::Kind::Not);
  CHECK(parse_state_formula("!(\"a\" & \"b\")")->left->kind ==
        StateFormula::Kind::And);
  CHECK(parse_state_formula("<<>> P<0.1 [X true]")->agents.empty());
}

TEST_CASE("parse errors carry positions") {
  for (const char* bad :
       {"", "\"unterminated", "<<A>> P>=0.5 [X \"a\"", "<<A>> Q>=1 [X \"a\"]",
        "\"a\" U<= \"b\"", "F<=2", "<<A>> P>=zz [X \"a\"]", "true & ",
        "<<A>> D<=0 [BCR(A)]", "(\"a\"", "\"a\" \"b\""}) {
    CHECK_THROWS_AS(parse_formula(bad), SyntaxError);
  }
}

TEST_CASE("printing is canonical and round-trips") {
  for (const char* text : {
           "true",
           "false",
           "\"crash\"",
           "!\"crash\"",
           "\"a\" & \"b\" & \"c\"",
           "\"a\" & (\"b\" & \"c\")",
           "!(\"a\" & \"b\")",
           "<<A1,A2>> P>=0.5 [X \"crash\"]",
           "<<A1>> P<0.2 [\"init\" U<=2 \"pass\"]",
           "<<>> P<=0.12 [F<=2 \"crash\"]",
           "<<A1,A2>> R{r1}>=2.64 [X true]",
           "<<A1,A2>> D<=0 [BCR(A1, p_brake, F<=2 \"crash\")]",
           "<<A2>> D>0.1 [BCR(A2, p_nb, X \"crash\")]",
       }) {
    Formula f = parse_formula(text);
    std::string printed = f.state ? print_formula(*f.state) : print_formula(*f.path);
    CHECK(printed == text);
    Formula again = parse_formula(printed);
    if (f.state)
      CHECK(equal(*f.state, *again.state));
    else
      CHECK(equal(*f.path, *again.path));
  }
  // Non-canonical spellings normalize.
  CHECK(print_formula(*parse_state_formula("!true")) == "false");
  CHECK(print_formula(*parse_path_formula("X(\"a\")")) == "X \"a\"");
}

TEST_CASE("horizon follows bounds") {
  CHECK(horizon(*parse_path_formula("X \"a\"")) == 1);
  CHECK(horizon(*parse_path_formula("F<=3 \"a\"")) == 3);
  CHECK(horizon(*parse_path_formula("G<=0 \"a\"")) == 0);
  CHECK(horizon(*parse_path_formula("\"a\" U<=2 \"b\"")) == 2);
}

TEST_CASE("equal distinguishes structure") {
  auto a = parse_state_formula("\"x\" & !\"y\"");
  auto b = parse_state_formula("\"x\" & !\"y\"");
  auto c = parse_state_formula("!\"y\" & \"x\"");
  CHECK(equal(*a, *b));
  CHECK(!equal(*a, *c));
  CHECK(!equal(*parse_path_formula("F<=2 \"x\""), *parse_path_formula("F<=3 \"x\"")));
}

TEST_CASE("atom evaluator reads labels and rejects operators") {
  auto model = testutil::load_junction();
  const Game& g = model.game;
  StateEvaluator eval = atom_evaluator(g);
  StateId s1 = g.state_id("s1");
  CHECK(eval(s1, *parse_state_formula("\"crash\"")));
  CHECK(!eval(s1, *parse_state_formula("\"pass\"")));
  CHECK(eval(s1, *parse_state_formula("\"crash\" & !\"init\"")));
  CHECK(eval(s1, *parse_state_formula("true")));
  CHECK_THROWS_AS(eval(s1, *parse_state_formula("\"nope\"")), UnknownAtom);
  CHECK_THROWS_AS(eval(s1, *parse_state_formula("<<A1>> P>=1 [X true]")), Error);
}

TEST_CASE("monitor edge cases at bound zero") {
  auto model = testutil::load_junction();
  const Game& g = model.game;
  StateEvaluator eval = atom_evaluator(g);
  StateId s0 = g.state_id("s0");
  StateId s1 = g.state_id("s1");

  ResolvedPath f0 = resolve_path(*parse_path_formula("F<=0 \"crash\""), g.num_states(), eval);
  CHECK(f0.init(s1) == Status::Satisfied);
  CHECK(f0.init(s0) == Status::Violated);

  ResolvedPath g0 = resolve_path(*parse_path_formula("G<=0 \"init\""), g.num_states(), eval);
  CHECK(g0.init(s0) == Status::Satisfied);
  CHECK(g0.init(s1) == Status::Violated);

  ResolvedPath u0 =
      resolve_path(*parse_path_formula("\"init\" U<=0 \"crash\""), g.num_states(), eval);
  CHECK(u0.init(s1) == Status::Satisfied);
  CHECK(u0.init(s0) == Status::Violated);  // bound exhausted, right false
}

TEST_CASE("monitor stepping matches direct path evaluation") {
  testutil::Rng rng(7003);
  for (int it = 0; it < 40; ++it) {
    Game g = testutil::random_game(rng);
    StateEvaluator eval = atom_evaluator(g);
    PathFormulaPtr f = random_path_formula(rng, g, 3);
    ResolvedPath rp = resolve_path(*f, g.num_states(), eval);
    StrategyProfile p = testutil::random_profile(g, rng);
    int H = horizon(*f);
    for (const auto& rec : testutil::enumerate_paths(g, p, std::max(H, 1))) {
      // Walk the monitor along the path.
      Status st = rp.init(rec.states[0]);
      for (int j = 1; j <= H && st == Status::Open; ++j)
        st = rp.step(st, rec.states[j], j);
      REQUIRE(st != Status::Open);  // horizon always decides
      CHECK((st == Status::Satisfied) == testutil::path_holds(g, rec.states, *f));
    }
  }
}

TEST_CASE("outcome sets combine monitors with any-of semantics") {
  auto model = testutil::load_junction();
  const Game& g = model.game;
  std::vector<PathFormulaPtr> alts = {parse_path_formula("X \"crash\""),
                                      parse_path_formula("F<=2 \"pass\"")};
  OutcomeSet out = resolve_outcome(g, alts);
  CHECK(out.horizon() == 2);
  CHECK(out.num_codes() == 9);

  StateId s0 = g.state_id("s0");
  StateId s1 = g.state_id("s1");
  StateId s2 = g.state_id("s2");
  int code = out.init_code(s0);
  CHECK(!out.decided(code));
  // s0 -> s1: first alternative satisfied.
  CHECK(out.satisfied(out.step_code(code, s1, 1)));
  // s0 -> s2: X crash violated but F pass satisfied.
  CHECK(out.satisfied(out.step_code(code, s2, 1)));
  // Single-member set: s0 -> s2 violates X crash.
  OutcomeSet solo = resolve_outcome(g, *alts[0]);
  CHECK(solo.violated(solo.step_code(solo.init_code(s0), s2, 1)));
  // Satisfied and violated codes are sticky.
  int sat = solo.step_code(solo.init_code(s0), s1, 1);
  CHECK(solo.satisfied(solo.step_code(sat, s2, 2)));
}

TEST_CASE("path_sat checks histories and length") {
  auto model = testutil::load_junction();
  const Game& g = model.game;
  StateEvaluator eval = atom_evaluator(g);
  StateId s0 = g.state_id("s0");
  JointAction nb{g.action_id(0, "nb1"), g.action_id(1, "nb2")};
  JointAction anyj{0, 0};
  History crash1(g, s0, {{nb, g.state_id("s1")}});
  History pass2(g, s0,
                {{JointAction{0, 0}, g.state_id("s2")}, {anyj, g.state_id("s2")}});

  CHECK(path_sat(crash1, *parse_path_formula("X \"crash\""), eval, g.num_states()));
  CHECK(!path_sat(pass2, *parse_path_formula("F<=2 \"crash\""), eval, g.num_states()));
  CHECK(path_sat(pass2, *parse_path_formula("\"init\" U<=2 \"pass\""), eval,
                 g.num_states()));
  // Still open after one step: F<=2 crash on a length-1 non-crash prefix.
  History short1(g, s0, {{JointAction{0, 0}, g.state_id("s2")}});
  CHECK_THROWS_AS(
      path_sat(short1, *parse_path_formula("F<=2 \"crash\""), eval, g.num_states()),
      HistoryTooShort);
}
