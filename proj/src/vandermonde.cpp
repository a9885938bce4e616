#include "blindpoly/vandermonde.hpp"

#include "blindpoly/error.hpp"
#include "blindpoly/kernels.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>

namespace blindpoly {

SampleLocations::SampleLocations(Vector values) : values_(std::move(values)) {
    if (values_.size() < 1) throw InvalidInput("sample locations must be non-empty");
    if (!values_.allFinite()) throw InvalidInput("sample locations must be finite");
}

SampleLocations::SampleLocations(std::initializer_list<double> values)
    : SampleLocations(Vector(Eigen::Map<const Vector>(values.begin(),
                                                      static_cast<Eigen::Index>(values.size())))) {}

Matrix build_vandermonde(const SampleLocations& x, Eigen::Index K) {
    if (K < 1) throw InvalidInput("Vandermonde degree count K must be at least 1");
    const Eigen::Index N = x.size();
    Matrix V(N, K);
    V.col(0).setOnes();
    const auto xs = x.span();
    for (Eigen::Index k = 1; k < K; ++k) {
        kernels::multiply({V.col(k - 1).data(), xs.size()}, xs, {V.col(k).data(), xs.size()});
    }
    return V;
}

Matrix differentiation_matrix(Eigen::Index K) {
    if (K < 1) throw InvalidInput("differentiation matrix size K must be at least 1");
    Matrix D = Matrix::Zero(K, K);
    for (Eigen::Index k = 1; k < K; ++k) D(k - 1, k) = static_cast<double>(k);
    return D;
}

Eigen::Index numerical_rank(const Vector& singular_values, Eigen::Index rows, Eigen::Index cols) {
    if (singular_values.size() == 0) return 0;
    const double smax = singular_values.maxCoeff();
    const double tol = static_cast<double>(std::max(rows, cols)) * smax *
                       std::numeric_limits<double>::epsilon();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < singular_values.size(); ++i) {
        if (singular_values[i] > tol) ++rank;
    }
    return rank;
}

namespace {

Eigen::JacobiSVD<Matrix> full_rank_svd(const Matrix& V) {
    if (!V.allFinite()) throw InvalidInput("design matrix has non-finite entries");
    Eigen::JacobiSVD<Matrix> svd(V, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::Index rank = numerical_rank(svd.singularValues(), V.rows(), V.cols());
    if (rank < V.cols()) {
        throw RankDeficient(fmt::format("design matrix is rank deficient: rank {} < {} columns",
                                        rank, V.cols()),
                            rank, V.cols());
    }
    return svd;
}

}  // namespace

Vector ols_fit(const Matrix& V, const Vector& y) {
    if (y.size() != V.rows()) throw InvalidInput("ols_fit: y length must match rows of V");
    return full_rank_svd(V).solve(y);
}

Matrix ols_fit(const Matrix& V, const Matrix& Y) {
    if (Y.rows() != V.rows()) throw InvalidInput("ols_fit: Y rows must match rows of V");
    return full_rank_svd(V).solve(Y);
}

ObservationMatrix synthesize_observations(const SampleLocations& x, const CoefficientMatrix& W) {
    if (W.rows() < 1 || W.cols() < 1) throw InvalidInput("coefficient matrix must be non-empty");
    if (!W.allFinite()) throw InvalidInput("coefficient matrix must be finite");
    return build_vandermonde(x, W.rows()) * W;
}

double condition_estimate(const Matrix& V) {
    if (V.size() == 0) return std::numeric_limits<double>::infinity();
    Eigen::JacobiSVD<Matrix> svd(V);
    const Vector& s = svd.singularValues();
    // Thin SVD only reports min(N, K) values; a wide matrix has K - N implicit zeros.
    if (V.rows() < V.cols()) return std::numeric_limits<double>::infinity();
    // Singular values below the rank tolerance are roundoff of an exact zero.
    if (numerical_rank(s, V.rows(), V.cols()) < s.size()) {
        return std::numeric_limits<double>::infinity();
    }
    return s.maxCoeff() / s.minCoeff();
}

}  // namespace blindpoly
