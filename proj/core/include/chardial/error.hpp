#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace chardial {

/// A broken invariant reported as a value. `rule` is the short stable label
/// ("profile empty", "multi-party", ...); `field` names where it was found.
struct Violation {
    std::string field;
    std::string rule;

    bool operator==(const Violation&) const = default;
};

std::string describe(const std::vector<Violation>& violations);

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
  public:
    explicit ValidationError(std::vector<Violation> violations);
    explicit ValidationError(Violation violation);
    ValidationError(const std::string& what, std::vector<Violation> violations);

    const std::vector<Violation>& violations() const noexcept { return violations_; }

  private:
    std::vector<Violation> violations_;
};

/// Dialogue protocol breaches raised by append/refine operations.
class ProtocolError : public Error {
  public:
    enum class Kind { WrongSpeaker, ClosedSession, InvalidUtterance, NotCharacterTurn, WrongProvenance, TurnOutOfRange };

    ProtocolError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

  private:
    Kind kind_;
};

class NotFoundError : public Error {
  public:
    using Error::Error;
};

/// Duplicate submissions (second choice for a turn, duplicate tags, double claims).
class ConflictError : public Error {
  public:
    using Error::Error;
};

/// Operation not valid in the current state (e.g. choosing before candidates exist).
class StateError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

class ParseError : public Error {
  public:
    ParseError(const std::string& what, std::size_t line) : Error(what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

class TemplateError : public Error {
  public:
    using Error::Error;
};

/// A prompt transformer failed or produced nothing usable.
class TransformerError : public Error {
  public:
    using Error::Error;
};

}  // namespace chardial
