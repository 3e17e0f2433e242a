#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace respgames {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// One violated model invariant; validation collects all of them before failing.
struct Violation {
  enum class Kind {
    MissingTransition,
    DistributionNotNormalized,
    UnknownIdentifier,
    EmptyAvailability,
    Duplicate,
    BadInitialState,
    BadStrategy,
  };
  Kind kind;
  std::string message;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}
  const std::vector<Violation>& violations() const { return violations_; }
  bool has(Violation::Kind kind) const {
    for (const auto& v : violations_)
      if (v.kind == kind) return true;
    return false;
  }

 private:
  static std::string join(const std::vector<Violation>& vs) {
    std::string out = "model validation failed:";
    for (const auto& v : vs) out += "\n  " + v.message;
    return out;
  }
  std::vector<Violation> violations_;
};

// Lexical or structural error in a model file or a formula, with a position.
class SyntaxError : public Error {
 public:
  SyntaxError(int line, const std::string& msg)
      : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class UnknownIdentifier : public Error {
 public:
  using Error::Error;
};

class PartialProfile : public Error {
 public:
  using Error::Error;
};

class AgentNotInScope : public Error {
 public:
  using Error::Error;
};

// History has zero probability under the profile it is scored against.
class IncompatibleHistory : public Error {
 public:
  using Error::Error;
};

// History ends before the path formula's verdict is determined.
class HistoryTooShort : public Error {
 public:
  using Error::Error;
};

class CoalitionTooLarge : public Error {
 public:
  using Error::Error;
};

class UnknownProfile : public Error {
 public:
  using Error::Error;
};

class UnknownReward : public Error {
 public:
  using Error::Error;
};

class UnknownAtom : public Error {
 public:
  using Error::Error;
};

class MissingConstantStrategy : public Error {
 public:
  using Error::Error;
};

class MissingParameter : public Error {
 public:
  using Error::Error;
};

// The requested closed form does not exist (or could not be certified).
class NonPolynomial : public Error {
 public:
  using Error::Error;
};

class NoSolutionFound : public Error {
 public:
  using Error::Error;
};

}  // namespace respgames
