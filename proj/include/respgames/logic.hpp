#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "respgames/model.hpp"

namespace respgames {

enum class Rel { Le, Lt, Ge, Gt };

// Probability/value comparisons carry an absolute tolerance: values within
// tol of the bound satisfy the non-strict forms and fail the strict ones.
bool rel_holds(double value, Rel rel, double bound, double tol = 1e-9);
std::string rel_str(Rel rel);

struct StateFormula;
struct PathFormula;
using StateFormulaPtr = std::shared_ptr<const StateFormula>;
using PathFormulaPtr = std::shared_ptr<const PathFormula>;

// X phi | phi1 U<=k phi2 | F<=k phi | G<=k phi. Bounds are step counts.
struct PathFormula {
  enum class Kind { Next, Until, Eventually, Always };
  Kind kind;
  int bound = 1;           // Next: always 1
  StateFormulaPtr left;    // Until only
  StateFormulaPtr sub;     // Next/Eventually/Always operand, Until right side
};

// "atom" | true | false (as !true) | !phi | phi & psi | <<A>>P~p[path]
// | <<A>>R{r}~q[path] | <<A>>D~d[BCR(i, profile, path)].
struct StateFormula {
  enum class Kind { True, Atom, Not, And, CoalitionP, CoalitionR, CoalitionD };
  Kind kind;
  std::string atom;                  // Atom
  StateFormulaPtr left, right;       // Not: left only
  std::vector<std::string> agents;   // coalition operators
  Rel rel = Rel::Ge;
  double bound = 0;
  std::string reward;                // CoalitionR
  std::string d_agent, d_profile;    // CoalitionD
  PathFormulaPtr path;
};

StateFormulaPtr make_true();
StateFormulaPtr make_atom(const std::string& name);
StateFormulaPtr make_not(StateFormulaPtr f);
StateFormulaPtr make_and(StateFormulaPtr l, StateFormulaPtr r);
PathFormulaPtr make_next(StateFormulaPtr f);
PathFormulaPtr make_until(StateFormulaPtr l, int bound, StateFormulaPtr r);
PathFormulaPtr make_eventually(int bound, StateFormulaPtr f);
PathFormulaPtr make_always(int bound, StateFormulaPtr f);

// Exactly one of the two members is set.
struct Formula {
  StateFormulaPtr state;
  PathFormulaPtr path;
};

// Grammar (whitespace-insensitive, '!' binds tighter than '&', '&' is
// left-associative):
//   state := 'true' | 'false' | '"'atom'"' | '!'state | state '&' state
//          | '(' state ')' | '<<'ids'>>' tail
//   tail  := 'P' rel num '[' path ']' | 'R' '{' id '}' rel num '[' path ']'
//          | 'D' rel num '[' 'BCR' '(' id ',' id ',' path ')' ']'
//   path  := 'X' state | 'F' '<=' int state | 'G' '<=' int state
//          | state 'U' '<=' int state
// Throws SyntaxError (line is always 1; the column is in the message).
Formula parse_formula(const std::string& text);
StateFormulaPtr parse_state_formula(const std::string& text);
PathFormulaPtr parse_path_formula(const std::string& text);

// Canonical printing; parse_formula(print_formula(f)) reproduces f.
std::string print_formula(const StateFormula& f);
std::string print_formula(const PathFormula& f);

bool equal(const StateFormula& a, const StateFormula& b);
bool equal(const PathFormula& a, const PathFormula& b);

// Number of steps that decide the formula: Next 1, bounded forms their bound.
int horizon(const PathFormula& f);

// Truth of a state formula at a state. Implementations that cannot handle
// coalition operators throw.
using StateEvaluator = std::function<bool(StateId, const StateFormula&)>;

// Evaluator over game labels; handles True/Atom/Not/And and throws
// UnknownAtom / Error on atoms missing from the game or nested operators.
StateEvaluator atom_evaluator(const Game& game);

enum class Status : uint8_t { Open, Satisfied, Violated };

// Path formula with state subformulas flattened to per-state truth masks;
// satisfaction along a path reduces to a three-state monitor.
struct ResolvedPath {
  PathFormula::Kind kind;
  int bound = 1;
  std::vector<char> left;   // Until guard mask (empty otherwise)
  std::vector<char> right;  // target / operand mask

  int horizon() const { return kind == PathFormula::Kind::Next ? 1 : bound; }
  Status init(StateId s0) const;
  Status step(Status cur, StateId next, int step_index) const;
};

ResolvedPath resolve_path(const PathFormula& f, int num_states,
                          const StateEvaluator& eval);

// Set of path formulas under any-of satisfaction (an internal disjunction).
// The joint monitor status is a base-3 code over the members.
struct OutcomeSet {
  std::vector<ResolvedPath> alts;

  int horizon() const;
  int num_codes() const;
  int init_code(StateId s0) const;
  int step_code(int code, StateId next, int step_index) const;
  bool satisfied(int code) const;  // some member satisfied
  bool violated(int code) const;   // every member violated
  bool decided(int code) const { return satisfied(code) || violated(code); }
};

OutcomeSet resolve_outcome(const Game& game, const PathFormula& f);
OutcomeSet resolve_outcome(const Game& game, const std::vector<PathFormulaPtr>& fs);

// Whether the history satisfies the formula; throws HistoryTooShort when the
// history ends with the verdict still open.
bool path_sat(const History& history, const ResolvedPath& f);
bool path_sat(const History& history, const PathFormula& f, const StateEvaluator& eval,
              int num_states);

}  // namespace respgames
