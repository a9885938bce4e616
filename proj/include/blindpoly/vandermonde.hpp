#pragma once

// Monomial Vandermonde matrices and least-squares fitting.
//
// Column convention is ASCENDING degree throughout the library: entry (n, k)
// of V(x) is x_n^k, so column 0 is all ones and column K-1 holds x^(K-1).
// Coefficient vectors follow the same order, [w_0, w_1, ..., w_{K-1}].

#include "blindpoly/types.hpp"

namespace blindpoly {

/// N x K matrix with entry (n, k) = x_n^k. Column k is formed as
/// column(k-1) * x element-wise, so columns are reproducible bit for bit.
Matrix build_vandermonde(const SampleLocations& x, Eigen::Index K);

/// K x K differentiation matrix: superdiagonal (1, 2, ..., K-1), zero elsewhere.
/// V(x) * D has column k equal to k * x^(k-1).
Matrix differentiation_matrix(Eigen::Index K);

/// Least-squares coefficients minimizing ||y - V w||_2, via SVD.
/// Throws RankDeficient (carrying the numerical rank) when V lacks full
/// column rank, which covers duplicate locations and N < K.
Vector ols_fit(const Matrix& V, const Vector& y);

/// Column-wise ols_fit for a multi-channel right-hand side.
Matrix ols_fit(const Matrix& V, const Matrix& Y);

/// Noiseless observations Y = V(x) W.
ObservationMatrix synthesize_observations(const SampleLocations& x, const CoefficientMatrix& W);

/// sigma_max / sigma_min; +inf when sigma_min is zero. Informational only.
double condition_estimate(const Matrix& V);

/// Number of singular values above max(rows, cols) * sigma_max * eps.
Eigen::Index numerical_rank(const Vector& singular_values, Eigen::Index rows, Eigen::Index cols);

}  // namespace blindpoly
