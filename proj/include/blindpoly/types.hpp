#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <span>

namespace blindpoly {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// N x L matrix of sampled function values, one column per polynomial.
using ObservationMatrix = Matrix;

/// K x L matrix of monomial coefficients. Column l holds polynomial l in
/// ascending degree order: [w_0, w_1, ..., w_{K-1}].
using CoefficientMatrix = Matrix;

/// Sampling positions x_0..x_{N-1}. Non-empty and finite; distinctness is
/// checked only by the operations that need it.
class SampleLocations {
public:
    explicit SampleLocations(Vector values);
    SampleLocations(std::initializer_list<double> values);

    Eigen::Index size() const noexcept { return values_.size(); }
    double operator[](Eigen::Index n) const { return values_[n]; }
    const Vector& values() const noexcept { return values_; }
    std::span<const double> span() const noexcept {
        return {values_.data(), static_cast<std::size_t>(values_.size())};
    }

    friend bool operator==(const SampleLocations& a, const SampleLocations& b) {
        return a.values_.size() == b.values_.size() && a.values_ == b.values_;
    }

private:
    Vector values_;
};

inline std::span<const double> as_span(const Vector& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

inline std::span<double> as_span(Vector& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace blindpoly
