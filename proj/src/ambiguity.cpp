#include "blindpoly/ambiguity.hpp"

#include "blindpoly/error.hpp"
#include "blindpoly/vandermonde.hpp"

#include <cmath>
#include <limits>

namespace blindpoly {

PascalTransform::PascalTransform(double t0, double t1) : t0_(t0), t1_(t1) {
    if (!std::isfinite(t0) || !std::isfinite(t1)) {
        throw InvalidInput("Pascal transform parameters must be finite");
    }
    if (t1 == 0.0) throw InvalidInput("Pascal transform scale t1 must be nonzero");
}

PascalTransform PascalTransform::then(const PascalTransform& outer) const {
    // outer(t0 + t1 x) = (s0 + s1 t0) + (s1 t1) x
    return {outer.t0_ + outer.t1_ * t0_, outer.t1_ * t1_};
}

PascalTransform PascalTransform::inverse() const {
    return {-t0_ / t1_, 1.0 / t1_};
}

Matrix pascal_matrix(const PascalTransform& t, Eigen::Index K) {
    if (K < 1) throw InvalidInput("Pascal matrix size K must be at least 1");

    // Row j of `binom` holds C(j, 0..j).
    Matrix binom = Matrix::Zero(K, K);
    for (Eigen::Index j = 0; j < K; ++j) {
        binom(j, 0) = 1.0;
        for (Eigen::Index i = 1; i <= j; ++i) binom(j, i) = binom(j - 1, i - 1) + binom(j - 1, i);
    }

    Vector shift_pow(K), scale_pow(K);
    shift_pow[0] = scale_pow[0] = 1.0;
    for (Eigen::Index k = 1; k < K; ++k) {
        shift_pow[k] = shift_pow[k - 1] * t.shift();
        scale_pow[k] = scale_pow[k - 1] * t.scale();
    }

    Matrix T = Matrix::Zero(K, K);
    for (Eigen::Index j = 0; j < K; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            T(i, j) = binom(j, i) * shift_pow[j - i] * scale_pow[i];
        }
    }
    return T;
}

SampleLocations apply_transform(const PascalTransform& t, const SampleLocations& x) {
    return SampleLocations((t.shift() + t.scale() * x.values().array()).matrix());
}

double pascal_identity_residual(const SampleLocations& x, const PascalTransform& t,
                                const Matrix& T) {
    if (T.rows() != T.cols()) throw InvalidInput("transform matrix must be square");
    const Matrix lhs = build_vandermonde(x, T.rows()) * T;
    const Matrix rhs = build_vandermonde(apply_transform(t, x), T.rows());
    return (lhs - rhs).cwiseAbs().maxCoeff();
}

double verify_pascal_identity(const SampleLocations& x, const PascalTransform& t, Eigen::Index K) {
    return pascal_identity_residual(x, t, pascal_matrix(t, K));
}

PneResult pne(const SampleLocations& x_hat, const SampleLocations& x_true, double period) {
    const Eigen::Index N = x_true.size();
    if (x_hat.size() != N) throw InvalidInput("pne: estimate and truth differ in length");
    if (N < 2) throw InvalidInput("pne: at least two locations are required");
    if (!(period > 0.0) || !std::isfinite(period)) {
        throw InvalidInput("pne: sampling period must be positive and finite");
    }
    if (x_hat.values().maxCoeff() == x_hat.values().minCoeff()) {
        throw DegenerateEstimate("pne: estimate is constant, the affine scale is unidentifiable");
    }

    // Orthogonalize [1 | x_hat]: the constant column and the centered estimate.
    // Identical inputs give t1 == 1 and t0 == 0 exactly.
    const Vector& xh = x_hat.values();
    const Vector& xt = x_true.values();
    const double mean_hat = xh.mean();
    const double mean_true = xt.mean();
    const Vector centered_hat = xh.array() - mean_hat;
    const Vector centered_true = xt.array() - mean_true;
    const double denom = centered_hat.dot(centered_hat);
    if (!(denom > 0.0)) {
        throw DegenerateEstimate("pne: estimate has no spread, the affine scale is unidentifiable");
    }
    const double t1 = centered_hat.dot(centered_true) / denom;
    const double t0 = mean_true - t1 * mean_hat;
    const double residual = (xt.array() - (t0 + t1 * xh.array())).matrix().norm();
    return {residual / (static_cast<double>(N) * period), t0, t1};
}

double to_db(double value) {
    if (value == 0.0) return -std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(value);
}

}  // namespace blindpoly
