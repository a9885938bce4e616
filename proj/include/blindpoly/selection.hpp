#pragma once

// Selection sampling: restrict candidate locations to a grid of G points and
// pick the N-subset whose sub-Vandermonde best explains Y in the
// least-squares sense. The N x G selection matrix is never materialized;
// patterns index rows of the grid directly.

#include "blindpoly/types.hpp"

#include <cstdint>
#include <vector>

namespace blindpoly {

/// Strictly increasing candidate locations.
class CandidateGrid {
public:
    explicit CandidateGrid(Vector values);

    /// G points spaced uniformly over [lo, hi], endpoints included.
    static CandidateGrid uniform(double lo, double hi, Eigen::Index G);

    Eigen::Index size() const noexcept { return values_.size(); }
    const Vector& values() const noexcept { return values_; }

private:
    Vector values_;
};

/// Strictly increasing grid indices, one per observation row.
class SelectionPattern {
public:
    SelectionPattern(std::vector<Eigen::Index> indices, Eigen::Index grid_size);

    const std::vector<Eigen::Index>& indices() const noexcept { return indices_; }
    Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(indices_.size()); }

    friend bool operator==(const SelectionPattern&, const SelectionPattern&) = default;

private:
    std::vector<Eigen::Index> indices_;
};

struct SelectionFit {
    double residual;  // ||Y - A W_hat||_F^2, A = selected rows of V(grid)
    CoefficientMatrix W_hat;
};

struct SelectionResult {
    SelectionPattern pattern;
    double residual;
    CoefficientMatrix W_hat;
    SampleLocations x_hat;
    double patterns_evaluated;
};

struct SelectionConfig {
    /// Upper bound on binomial(G, N).
    double budget = 1e7;
    /// Residuals within tie_tolerance * max(1, ||Y||_F^2) of the running best
    /// count as ties and keep the lexicographically earlier pattern.
    double tie_tolerance = 1e-14;
    /// Worker threads; 0 means std::thread::hardware_concurrency().
    unsigned jobs = 1;
};

/// Residual and coefficients for one pattern.
SelectionFit selection_residual(const CandidateGrid& grid, const SelectionPattern& pattern,
                                const ObservationMatrix& Y, Eigen::Index K);

/// Minimizes the residual over all N-subsets of the grid, N = rows of Y.
/// Enumeration is lexicographic and the first minimizer wins; the parallel
/// path returns exactly what the sequential scan would. Throws
/// BudgetExceeded when binomial(G, N) > cfg.budget.
SelectionResult exhaustive_search(const CandidateGrid& grid, const ObservationMatrix& Y,
                                  Eigen::Index K, const SelectionConfig& cfg = {});

/// binomial(n, k) as a double (exact up to 2^53).
double binomial(std::int64_t n, std::int64_t k);

}  // namespace blindpoly
