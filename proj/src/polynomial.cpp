#include "respgames/polynomial.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

#include "respgames/errors.hpp"

namespace respgames {

namespace {

double int_pow(double base, int exp) {
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

std::string format_coeff(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

Polynomial::Polynomial(std::vector<std::string> variables)
    : vars_(std::move(variables)) {}

Polynomial Polynomial::constant(std::vector<std::string> variables, double c) {
  Polynomial p(std::move(variables));
  p.add_term(std::vector<int>(p.vars_.size(), 0), c);
  return p;
}

Polynomial Polynomial::variable(std::vector<std::string> variables,
                                const std::string& name) {
  Polynomial p(std::move(variables));
  std::vector<int> exps(p.vars_.size(), 0);
  exps[static_cast<size_t>(p.var_index(name))] = 1;
  p.add_term(exps, 1.0);
  return p;
}

bool Polynomial::is_constant() const {
  for (const auto& [exps, c] : terms_) {
    for (int e : exps)
      if (e != 0) return false;
  }
  return true;
}

double Polynomial::constant_value() const {
  if (!is_constant()) throw Error("polynomial is not constant: " + str());
  return terms_.empty() ? 0.0 : terms_.begin()->second;
}

int Polynomial::var_index(const std::string& name) const {
  for (size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i] == name) return static_cast<int>(i);
  throw Error("unknown polynomial variable: " + name);
}

void Polynomial::add_term(const std::vector<int>& exponents,
                          double coefficient) {
  if (exponents.size() != vars_.size())
    throw Error("exponent vector length does not match variable count");
  if (coefficient == 0.0) return;
  auto it = terms_.find(exponents);
  if (it == terms_.end()) {
    terms_.emplace(exponents, coefficient);
    return;
  }
  it->second += coefficient;
  if (it->second == 0.0) terms_.erase(it);
}

void Polynomial::check_compatible(const Polynomial& o) const {
  if (vars_ != o.vars_)
    throw Error("polynomials are over different variable lists");
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  check_compatible(o);
  Polynomial r = *this;
  for (const auto& [exps, c] : o.terms_) r.add_term(exps, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  check_compatible(o);
  Polynomial r = *this;
  for (const auto& [exps, c] : o.terms_) r.add_term(exps, -c);
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  check_compatible(o);
  Polynomial r(vars_);
  for (const auto& [ea, ca] : terms_) {
    for (const auto& [eb, cb] : o.terms_) {
      std::vector<int> exps(vars_.size());
      for (size_t i = 0; i < vars_.size(); ++i) exps[i] = ea[i] + eb[i];
      r.add_term(exps, ca * cb);
    }
  }
  return r;
}

Polynomial Polynomial::operator*(double c) const {
  Polynomial r(vars_);
  for (const auto& [exps, coeff] : terms_) r.add_term(exps, coeff * c);
  return r;
}

double Polynomial::eval(const std::vector<double>& point) const {
  if (point.size() != vars_.size())
    throw Error("evaluation point length does not match variable count");
  double total = 0.0;
  for (const auto& [exps, c] : terms_) {
    double t = c;
    for (size_t i = 0; i < exps.size(); ++i)
      if (exps[i] != 0) t *= int_pow(point[i], exps[i]);
    total += t;
  }
  return total;
}

double Polynomial::eval(const std::map<std::string, double>& point) const {
  std::vector<double> aligned(vars_.size());
  for (size_t i = 0; i < vars_.size(); ++i) {
    auto it = point.find(vars_[i]);
    if (it == point.end()) throw MissingParameter(vars_[i]);
    aligned[i] = it->second;
  }
  return eval(aligned);
}

Polynomial Polynomial::partial_derivative(const std::string& name) const {
  size_t idx = static_cast<size_t>(var_index(name));
  Polynomial r(vars_);
  for (const auto& [exps, c] : terms_) {
    if (exps[idx] == 0) continue;
    std::vector<int> d = exps;
    d[idx] -= 1;
    r.add_term(d, c * exps[idx]);
  }
  return r;
}

Polynomial Polynomial::substitute(const std::string& name, double value) const {
  size_t idx = static_cast<size_t>(var_index(name));
  Polynomial r(vars_);
  for (const auto& [exps, c] : terms_) {
    std::vector<int> d = exps;
    d[idx] = 0;
    r.add_term(d, c * int_pow(value, exps[idx]));
  }
  return r;
}

std::string Polynomial::str() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (const auto& [exps, c] : terms_) {
    double mag = std::fabs(c);
    bool negative = c < 0.0;
    if (out.empty()) {
      if (negative) out += "-";
    } else {
      out += negative ? " - " : " + ";
    }
    bool has_vars = false;
    for (int e : exps)
      if (e != 0) has_vars = true;
    std::string factors;
    for (size_t i = 0; i < exps.size(); ++i) {
      if (exps[i] == 0) continue;
      if (!factors.empty()) factors += "*";
      factors += vars_[i];
      if (exps[i] != 1) factors += "^" + std::to_string(exps[i]);
    }
    if (!has_vars) {
      out += format_coeff(mag);
    } else if (mag == 1.0) {
      out += factors;
    } else {
      out += format_coeff(mag) + "*" + factors;
    }
  }
  return out;
}

namespace {

// Grammar: sum of signed monomials, each a '*'-joined list of numbers and
// variables with optional integer '^' powers.
struct PolyParser {
  const std::string& text;
  size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  double parse_number() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() &&
           (std::isdigit(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '.'))
      ++pos;
    if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
      size_t mark = pos++;
      if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) ++pos;
      if (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        while (pos < text.size() &&
               std::isdigit(static_cast<unsigned char>(text[pos])))
          ++pos;
      } else {
        pos = mark;
      }
    }
    if (pos == start) throw Error("expected number in polynomial: " + text);
    return std::stod(text.substr(start, pos - start));
  }

  std::string parse_ident() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '_'))
      ++pos;
    if (pos == start) throw Error("expected identifier in polynomial: " + text);
    return text.substr(start, pos - start);
  }
};

}  // namespace

Polynomial parse_polynomial(const std::string& text,
                            const std::vector<std::string>& variables) {
  PolyParser parser{text};
  Polynomial result(variables);
  parser.skip_ws();
  if (parser.pos == text.size())
    throw Error("empty polynomial expression");
  bool first = true;
  while (true) {
    parser.skip_ws();
    if (parser.pos >= text.size()) break;
    double sign = 1.0;
    if (parser.eat('-')) {
      sign = -1.0;
    } else if (parser.eat('+')) {
      if (first) throw Error("polynomial cannot start with '+': " + text);
    } else if (!first) {
      throw Error("expected '+' or '-' in polynomial: " + text);
    }
    first = false;
    // One monomial: '*'-joined factors, each a number or ident['^'int].
    double coeff = sign;
    std::vector<int> exps(variables.size(), 0);
    bool more = true;
    while (more) {
      parser.skip_ws();
      if (parser.pos < text.size() &&
          (std::isdigit(static_cast<unsigned char>(text[parser.pos])) ||
           text[parser.pos] == '.')) {
        coeff *= parser.parse_number();
      } else {
        std::string name = parser.parse_ident();
        int idx = -1;
        for (size_t i = 0; i < variables.size(); ++i)
          if (variables[i] == name) idx = static_cast<int>(i);
        if (idx < 0) throw Error("unknown polynomial variable: " + name);
        int power = 1;
        if (parser.eat('^'))
          power = static_cast<int>(parser.parse_number());
        exps[static_cast<size_t>(idx)] += power;
      }
      more = parser.eat('*');
    }
    Polynomial term(variables);
    term.add_term(exps, coeff);
    result = result + term;
  }
  return result;
}

}  // namespace respgames
