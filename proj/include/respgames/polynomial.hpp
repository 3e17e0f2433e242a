#pragma once

#include <map>
#include <string>
#include <vector>

namespace respgames {

// Multivariate polynomial over a fixed, ordered variable list. Terms map an
// exponent vector (aligned with the variable list) to its coefficient; zero
// coefficients are never stored, so identical polynomials compare equal.
class Polynomial {
 public:
  Polynomial() = default;  // zero polynomial over no variables
  explicit Polynomial(std::vector<std::string> variables);

  static Polynomial constant(std::vector<std::string> variables, double c);
  static Polynomial variable(std::vector<std::string> variables,
                             const std::string& name);

  const std::vector<std::string>& variables() const { return vars_; }
  const std::map<std::vector<int>, double>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  // Constant means no term mentions a variable; the zero polynomial counts.
  bool is_constant() const;
  double constant_value() const;

  int var_index(const std::string& name) const;  // throws on unknown names

  // Accumulates into the term, dropping it when the coefficient cancels.
  void add_term(const std::vector<int>& exponents, double coefficient);

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(double c) const;
  Polynomial operator-() const { return *this * -1.0; }
  bool operator==(const Polynomial& o) const {
    return vars_ == o.vars_ && terms_ == o.terms_;
  }

  double eval(const std::vector<double>& point) const;  // aligned with variables
  double eval(const std::map<std::string, double>& point) const;

  Polynomial partial_derivative(const std::string& name) const;
  // Pins one variable to a value; the variable list is unchanged.
  Polynomial substitute(const std::string& name, double value) const;

  // Human form, e.g. "1 - 0.8*x1 - 0.4*x2 + 0.32*x1*x2"; "0" when zero.
  std::string str() const;

 private:
  void check_compatible(const Polynomial& o) const;

  std::vector<std::string> vars_;
  std::map<std::vector<int>, double> terms_;
};

// Parses a sum of monomials like "1*x1 + 0.4*x2 - 1.6*x1*x2 - 1" or
// "x^2 - 0.5" over the given variables. Throws Error on unknown names or
// malformed input.
Polynomial parse_polynomial(const std::string& text,
                            const std::vector<std::string>& variables);

}  // namespace respgames
