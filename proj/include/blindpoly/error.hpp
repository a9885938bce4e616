#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace blindpoly {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    /// Short machine-readable code, used in per-run CSV records.
    virtual const char* code() const noexcept { return "error"; }
};

/// Non-finite entries, shape mismatches, violated preconditions.
class InvalidInput : public Error {
public:
    using Error::Error;
    const char* code() const noexcept override { return "invalid-input"; }
};

/// A matrix that must have full column rank does not.
class RankDeficient : public Error {
public:
    RankDeficient(const std::string& what, long rank, long required)
        : Error(what), rank_(rank), required_(required) {}

    long rank() const noexcept { return rank_; }
    long required() const noexcept { return required_; }
    const char* code() const noexcept override { return "rank-deficient"; }

private:
    long rank_;
    long required_;
};

/// An estimate carries no information (e.g. all locations collapsed to one point).
class DegenerateEstimate : public Error {
public:
    using Error::Error;
    const char* code() const noexcept override { return "degenerate-estimate"; }
};

/// Exhaustive enumeration would exceed the configured number of patterns.
class BudgetExceeded : public Error {
public:
    BudgetExceeded(const std::string& what, double combinations)
        : Error(what), combinations_(combinations) {}

    /// binomial(G, N); a double because it may not fit in 64 bits.
    double combinations() const noexcept { return combinations_; }
    const char* code() const noexcept override { return "budget-exceeded"; }

private:
    double combinations_;
};

}  // namespace blindpoly
