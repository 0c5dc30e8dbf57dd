#pragma once

#include <stdexcept>
#include <string>

namespace idxdens {

/// Base of every error the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed literal, descriptor, or configuration value.
class ParseError : public Error {
public:
    using Error::Error;
};

/// An integer could not be factored within the configured work bound.
class FactorizationError : public Error {
public:
    using Error::Error;
};

/// A size guard (subset enumeration, sieve cap, ...) was exceeded.
class LimitError : public Error {
public:
    using Error::Error;
};

/// Caller violated an operation's precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// The request is well formed but outside what the analytic machinery
/// supports (predicate sets, non-separated singleton densities, ...).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// A sampling estimate did not collect enough evidence to be trusted.
class InconclusiveError : public Error {
public:
    InconclusiveError(const std::string& what, long long total, long long hits)
        : Error(what), total_(total), hits_(hits) {}
    long long total() const noexcept { return total_; }
    long long hits() const noexcept { return hits_; }

private:
    long long total_;
    long long hits_;
};

}  // namespace idxdens
