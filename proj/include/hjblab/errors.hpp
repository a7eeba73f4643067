#pragma once

#include <stdexcept>
#include <string>

namespace hjblab {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside the mathematical domain of an operation (negative c, NaN, ...).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(what) {}
};

// u' cannot be inverted at the requested marginal value. Carries the range of
// u' on the positive reals so callers can decide what the failure means.
class NotInvertibleError : public Error {
public:
    NotInvertibleError(const std::string& what, double range_lo, double range_hi,
                       bool lo_open, bool hi_open)
        : Error(what), range_lo(range_lo), range_hi(range_hi),
          lo_open(lo_open), hi_open(hi_open) {}
    double range_lo;
    double range_hi;
    bool lo_open;
    bool hi_open;
};

// A stated precondition (an audit inequality, an isolated steady state, ...)
// does not hold. `condition` names the inequality that broke.
class ConditionFailedError : public Error {
public:
    ConditionFailedError(const std::string& condition, const std::string& detail)
        : Error(condition + ": " + detail), condition(condition) {}
    std::string condition;
};

// The implicit-ODE integration lost its root bracket.
class SolveFailedError : public Error {
public:
    SolveFailedError(const std::string& what, double last_good_k)
        : Error(what), last_good_k(last_good_k) {}
    double last_good_k;
};

// Local concavity check failed at k; one-sided derivative machinery assumes
// a concave candidate.
class NotConcaveError : public Error {
public:
    explicit NotConcaveError(double k)
        : Error("candidate is not locally concave at k=" + std::to_string(k)), k(k) {}
    double k;
};

// The feedback control (u')^{-1}(V'(k)) is undefined along the path.
class PolicyUndefinedError : public Error {
public:
    PolicyUndefinedError(const std::string& what, double k) : Error(what), k(k) {}
    double k;
};

// Bad solver / oracle configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

// Malformed input document. `path` points at the offending field.
class ParseError : public Error {
public:
    ParseError(const std::string& what, const std::string& path)
        : Error(what + " (at " + path + ")"), path(path) {}
    std::string path;
};

// The payoff integral evaluated to minus infinity.
class MinusInfinitePayoffError : public Error {
public:
    explicit MinusInfinitePayoffError(const std::string& what) : Error(what) {}
};

}  // namespace hjblab
