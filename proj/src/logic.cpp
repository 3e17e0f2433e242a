#include "respgames/logic.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

namespace respgames {

bool rel_holds(double value, Rel rel, double bound, double tol) {
  switch (rel) {
    case Rel::Le: return value <= bound + tol;
    case Rel::Lt: return value < bound - tol;
    case Rel::Ge: return value >= bound - tol;
    case Rel::Gt: return value > bound + tol;
  }
  return false;
}

std::string rel_str(Rel rel) {
  switch (rel) {
    case Rel::Le: return "<=";
    case Rel::Lt: return "<";
    case Rel::Ge: return ">=";
    case Rel::Gt: return ">";
  }
  return "?";
}

StateFormulaPtr make_true() {
  auto f = std::make_shared<StateFormula>();
  f->kind = StateFormula::Kind::True;
  return f;
}

StateFormulaPtr make_atom(const std::string& name) {
  auto f = std::make_shared<StateFormula>();
  f->kind = StateFormula::Kind::Atom;
  f->atom = name;
  return f;
}

StateFormulaPtr make_not(StateFormulaPtr sub) {
  auto f = std::make_shared<StateFormula>();
  f->kind = StateFormula::Kind::Not;
  f->left = std::move(sub);
  return f;
}

StateFormulaPtr make_and(StateFormulaPtr l, StateFormulaPtr r) {
  auto f = std::make_shared<StateFormula>();
  f->kind = StateFormula::Kind::And;
  f->left = std::move(l);
  f->right = std::move(r);
  return f;
}

PathFormulaPtr make_next(StateFormulaPtr sub) {
  auto f = std::make_shared<PathFormula>();
  f->kind = PathFormula::Kind::Next;
  f->bound = 1;
  f->sub = std::move(sub);
  return f;
}

PathFormulaPtr make_until(StateFormulaPtr l, int bound, StateFormulaPtr r) {
  auto f = std::make_shared<PathFormula>();
  f->kind = PathFormula::Kind::Until;
  f->bound = bound;
  f->left = std::move(l);
  f->sub = std::move(r);
  return f;
}

PathFormulaPtr make_eventually(int bound, StateFormulaPtr sub) {
  auto f = std::make_shared<PathFormula>();
  f->kind = PathFormula::Kind::Eventually;
  f->bound = bound;
  f->sub = std::move(sub);
  return f;
}

PathFormulaPtr make_always(int bound, StateFormulaPtr sub) {
  auto f = std::make_shared<PathFormula>();
  f->kind = PathFormula::Kind::Always;
  f->bound = bound;
  f->sub = std::move(sub);
  return f;
}

namespace {

struct Token {
  enum class Kind {
    Ident,    // bare identifier or keyword
    Atom,     // quoted
    Number,
    Sym,      // punctuation, stored in text
    End,
  };
  Kind kind;
  std::string text;
  double number = 0;
  int column = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) { advance(); }

  const Token& peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(1, msg + " at column " + std::to_string(tok_.column) +
                             (tok_.kind == Token::Kind::End
                                  ? " (end of input)"
                                  : " near '" + tok_.text + "'"));
  }

 private:
  void advance() {
    while (pos_ < text_.size() && std::isspace((unsigned char)text_[pos_])) ++pos_;
    tok_ = Token{Token::Kind::End, "", 0, (int)pos_ + 1};
    if (pos_ >= text_.size()) return;
    size_t start = pos_;
    char c = text_[pos_];
    auto sym = [&](const std::string& s) {
      tok_ = Token{Token::Kind::Sym, s, 0, (int)start + 1};
      pos_ += s.size();
    };
    if (c == '"') {
      size_t end = text_.find('"', pos_ + 1);
      if (end == std::string::npos)
        throw SyntaxError(1, "unterminated atom quote at column " +
                                 std::to_string(start + 1));
      tok_ = Token{Token::Kind::Atom, text_.substr(pos_ + 1, end - pos_ - 1), 0,
                   (int)start + 1};
      pos_ = end + 1;
      return;
    }
    if (text_.compare(pos_, 2, "<<") == 0) return sym("<<");
    if (text_.compare(pos_, 2, ">>") == 0) return sym(">>");
    if (text_.compare(pos_, 2, "<=") == 0) return sym("<=");
    if (text_.compare(pos_, 2, ">=") == 0) return sym(">=");
    if (std::string("<>!&()[]{},").find(c) != std::string::npos)
      return sym(std::string(1, c));
    if (std::isdigit((unsigned char)c) || c == '-' || c == '.') {
      double v = 0;
      const char* begin = text_.data() + pos_;
      const char* end = text_.data() + text_.size();
      auto res = std::from_chars(begin, end, v);
      if (res.ec != std::errc())
        throw SyntaxError(1, "bad number at column " + std::to_string(start + 1));
      tok_ = Token{Token::Kind::Number, std::string(begin, res.ptr), v,
                   (int)start + 1};
      pos_ += res.ptr - begin;
      return;
    }
    if (std::isalpha((unsigned char)c) || c == '_') {
      size_t end = pos_;
      while (end < text_.size() &&
             (std::isalnum((unsigned char)text_[end]) || text_[end] == '_'))
        ++end;
      tok_ = Token{Token::Kind::Ident, text_.substr(pos_, end - pos_), 0,
                   (int)start + 1};
      pos_ = end;
      return;
    }
    throw SyntaxError(1, std::string("unexpected character '") + c +
                             "' at column " + std::to_string(start + 1));
  }

  const std::string& text_;
  size_t pos_ = 0;
  Token tok_;
};

class FormulaParser {
 public:
  explicit FormulaParser(const std::string& text) : lex_(text) {}

  Formula parse() {
    Formula out;
    if (starts_path()) {
      out.path = path();
    } else {
      StateFormulaPtr st = state();
      if (is_ident("U")) {
        lex_.next();
        expect_sym("<=");
        int k = integer();
        out.path = make_until(std::move(st), k, state());
      } else {
        out.state = std::move(st);
      }
    }
    if (lex_.peek().kind != Token::Kind::End) lex_.fail("trailing input");
    return out;
  }

 private:
  bool is_ident(const std::string& s) const {
    return lex_.peek().kind == Token::Kind::Ident && lex_.peek().text == s;
  }
  bool is_sym(const std::string& s) const {
    return lex_.peek().kind == Token::Kind::Sym && lex_.peek().text == s;
  }
  void expect_sym(const std::string& s) {
    if (!is_sym(s)) lex_.fail("expected '" + s + "'");
    lex_.next();
  }
  bool starts_path() const { return is_ident("X") || is_ident("F") || is_ident("G"); }

  int integer() {
    if (lex_.peek().kind != Token::Kind::Number) lex_.fail("expected a step bound");
    Token t = lex_.next();
    int k = (int)t.number;
    if (k < 0 || (double)k != t.number) lex_.fail("step bound must be a whole number");
    return k;
  }

  double number() {
    if (lex_.peek().kind != Token::Kind::Number) lex_.fail("expected a number");
    return lex_.next().number;
  }

  Rel relation() {
    if (is_sym("<=")) return lex_.next(), Rel::Le;
    if (is_sym(">=")) return lex_.next(), Rel::Ge;
    if (is_sym("<")) return lex_.next(), Rel::Lt;
    if (is_sym(">")) return lex_.next(), Rel::Gt;
    lex_.fail("expected a relation");
  }

  std::string ident() {
    if (lex_.peek().kind != Token::Kind::Ident) lex_.fail("expected an identifier");
    return lex_.next().text;
  }

  StateFormulaPtr state() {
    StateFormulaPtr f = unary();
    while (is_sym("&")) {
      lex_.next();
      f = make_and(std::move(f), unary());
    }
    return f;
  }

  StateFormulaPtr unary() {
    if (is_sym("!")) {
      lex_.next();
      return make_not(unary());
    }
    return primary();
  }

  StateFormulaPtr primary() {
    const Token& t = lex_.peek();
    if (t.kind == Token::Kind::Atom) return make_atom(lex_.next().text);
    if (is_ident("true")) return lex_.next(), make_true();
    if (is_ident("false")) return lex_.next(), make_not(make_true());
    if (is_sym("(")) {
      lex_.next();
      StateFormulaPtr f = state();
      expect_sym(")");
      return f;
    }
    if (is_sym("<<")) return coalition();
    lex_.fail("expected a state formula");
  }

  StateFormulaPtr coalition() {
    expect_sym("<<");
    auto f = std::make_shared<StateFormula>();
    if (!is_sym(">>")) {
      f->agents.push_back(ident());
      while (is_sym(",")) {
        lex_.next();
        f->agents.push_back(ident());
      }
    }
    expect_sym(">>");
    std::string op = ident();
    if (op == "P") {
      f->kind = StateFormula::Kind::CoalitionP;
      f->rel = relation();
      f->bound = number();
      expect_sym("[");
      f->path = path();
      expect_sym("]");
    } else if (op == "R") {
      f->kind = StateFormula::Kind::CoalitionR;
      expect_sym("{");
      f->reward = ident();
      expect_sym("}");
      f->rel = relation();
      f->bound = number();
      expect_sym("[");
      f->path = path();
      expect_sym("]");
    } else if (op == "D") {
      f->kind = StateFormula::Kind::CoalitionD;
      f->rel = relation();
      f->bound = number();
      expect_sym("[");
      if (!is_ident("BCR")) lex_.fail("expected BCR");
      lex_.next();
      expect_sym("(");
      f->d_agent = ident();
      expect_sym(",");
      f->d_profile = ident();
      expect_sym(",");
      f->path = path();
      expect_sym(")");
      expect_sym("]");
    } else {
      lex_.fail("expected P, R or D after '>>'");
    }
    return f;
  }

  PathFormulaPtr path() {
    if (is_ident("X")) {
      lex_.next();
      return make_next(state());
    }
    if (is_ident("F")) {
      lex_.next();
      expect_sym("<=");
      int k = integer();
      return make_eventually(k, state());
    }
    if (is_ident("G")) {
      lex_.next();
      expect_sym("<=");
      int k = integer();
      return make_always(k, state());
    }
    StateFormulaPtr l = state();
    if (!is_ident("U")) lex_.fail("expected 'U' in a path formula");
    lex_.next();
    expect_sym("<=");
    int k = integer();
    return make_until(std::move(l), k, state());
  }

  Lexer lex_;
};

std::string format_bound(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void print_state(const StateFormula& f, std::string& out);

void print_path(const PathFormula& f, std::string& out) {
  switch (f.kind) {
    case PathFormula::Kind::Next:
      out += "X ";
      print_state(*f.sub, out);
      break;
    case PathFormula::Kind::Eventually:
      out += "F<=" + std::to_string(f.bound) + " ";
      print_state(*f.sub, out);
      break;
    case PathFormula::Kind::Always:
      out += "G<=" + std::to_string(f.bound) + " ";
      print_state(*f.sub, out);
      break;
    case PathFormula::Kind::Until:
      print_state(*f.left, out);
      out += " U<=" + std::to_string(f.bound) + " ";
      print_state(*f.sub, out);
      break;
  }
}

bool is_false(const StateFormula& f) {
  return f.kind == StateFormula::Kind::Not &&
         f.left->kind == StateFormula::Kind::True;
}

void print_state(const StateFormula& f, std::string& out) {
  switch (f.kind) {
    case StateFormula::Kind::True:
      out += "true";
      break;
    case StateFormula::Kind::Atom:
      out += "\"" + f.atom + "\"";
      break;
    case StateFormula::Kind::Not:
      if (is_false(f)) {
        out += "false";
        break;
      }
      out += "!";
      if (f.left->kind == StateFormula::Kind::And) {
        out += "(";
        print_state(*f.left, out);
        out += ")";
      } else {
        print_state(*f.left, out);
      }
      break;
    case StateFormula::Kind::And:
      print_state(*f.left, out);  // '&' is left-associative
      out += " & ";
      if (f.right->kind == StateFormula::Kind::And) {
        out += "(";
        print_state(*f.right, out);
        out += ")";
      } else {
        print_state(*f.right, out);
      }
      break;
    case StateFormula::Kind::CoalitionP:
    case StateFormula::Kind::CoalitionR:
    case StateFormula::Kind::CoalitionD: {
      out += "<<";
      for (size_t i = 0; i < f.agents.size(); ++i) {
        if (i) out += ",";
        out += f.agents[i];
      }
      out += ">> ";
      if (f.kind == StateFormula::Kind::CoalitionP) {
        out += "P" + rel_str(f.rel) + format_bound(f.bound) + " [";
        print_path(*f.path, out);
        out += "]";
      } else if (f.kind == StateFormula::Kind::CoalitionR) {
        out += "R{" + f.reward + "}" + rel_str(f.rel) + format_bound(f.bound) + " [";
        print_path(*f.path, out);
        out += "]";
      } else {
        out += "D" + rel_str(f.rel) + format_bound(f.bound) + " [BCR(" + f.d_agent +
               ", " + f.d_profile + ", ";
        print_path(*f.path, out);
        out += ")]";
      }
      break;
    }
  }
}

}  // namespace

Formula parse_formula(const std::string& text) { return FormulaParser(text).parse(); }

StateFormulaPtr parse_state_formula(const std::string& text) {
  Formula f = parse_formula(text);
  if (!f.state) throw SyntaxError(1, "expected a state formula, got a path formula");
  return f.state;
}

PathFormulaPtr parse_path_formula(const std::string& text) {
  Formula f = parse_formula(text);
  if (!f.path) throw SyntaxError(1, "expected a path formula, got a state formula");
  return f.path;
}

std::string print_formula(const StateFormula& f) {
  std::string out;
  print_state(f, out);
  return out;
}

std::string print_formula(const PathFormula& f) {
  std::string out;
  print_path(f, out);
  return out;
}

bool equal(const PathFormula& a, const PathFormula& b) {
  if (a.kind != b.kind || a.bound != b.bound) return false;
  if ((a.left != nullptr) != (b.left != nullptr)) return false;
  if (a.left && !equal(*a.left, *b.left)) return false;
  return equal(*a.sub, *b.sub);
}

bool equal(const StateFormula& a, const StateFormula& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case StateFormula::Kind::True: return true;
    case StateFormula::Kind::Atom: return a.atom == b.atom;
    case StateFormula::Kind::Not: return equal(*a.left, *b.left);
    case StateFormula::Kind::And:
      return equal(*a.left, *b.left) && equal(*a.right, *b.right);
    default:
      break;
  }
  if (a.agents != b.agents || a.rel != b.rel || a.bound != b.bound) return false;
  if (a.kind == StateFormula::Kind::CoalitionR && a.reward != b.reward) return false;
  if (a.kind == StateFormula::Kind::CoalitionD &&
      (a.d_agent != b.d_agent || a.d_profile != b.d_profile))
    return false;
  return equal(*a.path, *b.path);
}

int horizon(const PathFormula& f) {
  return f.kind == PathFormula::Kind::Next ? 1 : f.bound;
}

StateEvaluator atom_evaluator(const Game& game) {
  return [&game](StateId s, const StateFormula& f) {
    std::function<bool(const StateFormula&)> go = [&](const StateFormula& sf) -> bool {
      switch (sf.kind) {
        case StateFormula::Kind::True: return true;
        case StateFormula::Kind::Atom: return game.label(s, game.atom_id(sf.atom));
        case StateFormula::Kind::Not: return !go(*sf.left);
        case StateFormula::Kind::And: return go(*sf.left) && go(*sf.right);
        default:
          throw Error("nested coalition operator needs the checker, not the plain "
                      "atom evaluator");
      }
    };
    return go(f);
  };
}

Status ResolvedPath::init(StateId s0) const {
  switch (kind) {
    case PathFormula::Kind::Next:
      return Status::Open;
    case PathFormula::Kind::Until:
      if (right[s0]) return Status::Satisfied;
      if (bound == 0 || !left[s0]) return Status::Violated;
      return Status::Open;
    case PathFormula::Kind::Eventually:
      if (right[s0]) return Status::Satisfied;
      return bound == 0 ? Status::Violated : Status::Open;
    case PathFormula::Kind::Always:
      if (!right[s0]) return Status::Violated;
      return bound == 0 ? Status::Satisfied : Status::Open;
  }
  return Status::Open;
}

Status ResolvedPath::step(Status cur, StateId next, int step_index) const {
  if (cur != Status::Open) return cur;
  switch (kind) {
    case PathFormula::Kind::Next:
      return right[next] ? Status::Satisfied : Status::Violated;
    case PathFormula::Kind::Until:
      if (right[next]) return Status::Satisfied;
      if (step_index >= bound || !left[next]) return Status::Violated;
      return Status::Open;
    case PathFormula::Kind::Eventually:
      if (right[next]) return Status::Satisfied;
      return step_index >= bound ? Status::Violated : Status::Open;
    case PathFormula::Kind::Always:
      if (!right[next]) return Status::Violated;
      return step_index >= bound ? Status::Satisfied : Status::Open;
  }
  return cur;
}

ResolvedPath resolve_path(const PathFormula& f, int num_states,
                          const StateEvaluator& eval) {
  ResolvedPath out;
  out.kind = f.kind;
  out.bound = f.kind == PathFormula::Kind::Next ? 1 : f.bound;
  out.right.resize(num_states);
  for (StateId s = 0; s < num_states; ++s) out.right[s] = eval(s, *f.sub) ? 1 : 0;
  if (f.kind == PathFormula::Kind::Until) {
    out.left.resize(num_states);
    for (StateId s = 0; s < num_states; ++s) out.left[s] = eval(s, *f.left) ? 1 : 0;
  }
  return out;
}

int OutcomeSet::horizon() const {
  int h = 0;
  for (const auto& alt : alts) h = std::max(h, alt.horizon());
  return h;
}

int OutcomeSet::num_codes() const {
  int n = 1;
  for (size_t i = 0; i < alts.size(); ++i) n *= 3;
  return n;
}

int OutcomeSet::init_code(StateId s0) const {
  int code = 0;
  for (size_t i = alts.size(); i-- > 0;) code = code * 3 + (int)alts[i].init(s0);
  return code;
}

int OutcomeSet::step_code(int code, StateId next, int step_index) const {
  int out = 0;
  int base = 1;
  for (size_t i = 0; i < alts.size(); ++i) {
    Status st = (Status)(code % 3);
    code /= 3;
    out += (int)alts[i].step(st, next, step_index) * base;
    base *= 3;
  }
  return out;
}

bool OutcomeSet::satisfied(int code) const {
  for (size_t i = 0; i < alts.size(); ++i) {
    if ((Status)(code % 3) == Status::Satisfied) return true;
    code /= 3;
  }
  return false;
}

bool OutcomeSet::violated(int code) const {
  for (size_t i = 0; i < alts.size(); ++i) {
    if ((Status)(code % 3) != Status::Violated) return false;
    code /= 3;
  }
  return true;
}

OutcomeSet resolve_outcome(const Game& game, const PathFormula& f) {
  OutcomeSet out;
  out.alts.push_back(resolve_path(f, game.num_states(), atom_evaluator(game)));
  return out;
}

OutcomeSet resolve_outcome(const Game& game, const std::vector<PathFormulaPtr>& fs) {
  OutcomeSet out;
  for (const auto& f : fs)
    out.alts.push_back(resolve_path(*f, game.num_states(), atom_evaluator(game)));
  return out;
}

bool path_sat(const History& history, const ResolvedPath& f) {
  Status st = f.init(history.state(0));
  for (int j = 1; j <= history.length() && st == Status::Open; ++j)
    st = f.step(st, history.state(j), j);
  if (st == Status::Open)
    throw HistoryTooShort("history of length " + std::to_string(history.length()) +
                          " does not decide a horizon-" + std::to_string(f.horizon()) +
                          " formula");
  return st == Status::Satisfied;
}

bool path_sat(const History& history, const PathFormula& f, const StateEvaluator& eval,
              int num_states) {
  return path_sat(history, resolve_path(f, num_states, eval));
}

}  // namespace respgames
