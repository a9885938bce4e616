#pragma once

// The affine ambiguity of Y = V(x) W. For any shift t0 and nonzero scale t1,
//
//     v(x)^T * T(t0, t1) = v(t0 + t1 * x)^T,
//
// where T is the upper Pascal matrix with entry (i, j) = C(j, i) t0^(j-i) t1^i.
// Hence V(t0 + t1 x) = V(x) T spans the same column space as V(x), and
// locations are recoverable from Y only modulo such affine maps.

#include "blindpoly/types.hpp"

namespace blindpoly {

/// Invertible affine map x -> t0 + t1 * x. Construction rejects t1 == 0.
class PascalTransform {
public:
    PascalTransform(double t0, double t1);

    static PascalTransform identity() { return {0.0, 1.0}; }

    double shift() const noexcept { return t0_; }
    double scale() const noexcept { return t1_; }

    double operator()(double x) const noexcept { return t0_ + t1_ * x; }

    /// The map x -> outer(this(x)).
    PascalTransform then(const PascalTransform& outer) const;

    PascalTransform inverse() const;

private:
    double t0_;
    double t1_;
};

/// K x K upper Pascal matrix of `t`. Binomial coefficients come from the
/// additive recurrence; (0, 1) yields the identity.
Matrix pascal_matrix(const PascalTransform& t, Eigen::Index K);

/// Element-wise t0 + t1 * x_n.
SampleLocations apply_transform(const PascalTransform& t, const SampleLocations& x);

/// max_n || v(x_n)^T T - v(t0 + t1 x_n)^T ||_inf for the given K x K matrix T.
/// Lets tests probe perturbed (non-Pascal) matrices.
double pascal_identity_residual(const SampleLocations& x, const PascalTransform& t,
                                const Matrix& T);

/// pascal_identity_residual with T = pascal_matrix(t, K).
double verify_pascal_identity(const SampleLocations& x, const PascalTransform& t, Eigen::Index K);

struct PneResult {
    double value;  // ||x - (t0 + t1 x_hat)||_2 / (N T), nonnegative
    double t0;
    double t1;
};

/// Pascal-normalized error: distance of the true locations from the best
/// affine image of the estimate, normalized by N times the sampling period.
/// Throws DegenerateEstimate when x_hat is constant.
PneResult pne(const SampleLocations& x_hat, const SampleLocations& x_true, double period);

/// 20 log10(value); -inf for zero.
double to_db(double value);

}  // namespace blindpoly
