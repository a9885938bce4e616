#include "blindpoly/error.hpp"
#include "blindpoly/kernels.hpp"
#include "blindpoly/vandermonde.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace blindpoly;

namespace {

Vector linspace(double lo, double hi, Eigen::Index n) {
    return Vector::LinSpaced(n, lo, hi);
}

// Horner evaluation of column l of W at t, independent of build_vandermonde.
double horner(const Matrix& W, Eigen::Index l, double t) {
    double acc = 0.0;
    for (Eigen::Index k = W.rows() - 1; k >= 0; --k) acc = acc * t + W(k, l);
    return acc;
}

}  // namespace

TEST_CASE("build_vandermonde small cases") {
    SUBCASE("zero location") {
        const Matrix V = build_vandermonde(SampleLocations{0.0}, 3);
        CHECK(V.rows() == 1);
        CHECK(V(0, 0) == 1.0);
        CHECK(V(0, 1) == 0.0);
        CHECK(V(0, 2) == 0.0);
    }
    SUBCASE("x = 1 gives rows of ones") {
        const Matrix V = build_vandermonde(SampleLocations{1.0, 1.0}, 4);
        CHECK(V == Matrix::Ones(2, 4));
    }
    SUBCASE("ascending-degree columns") {
        const Matrix V = build_vandermonde(SampleLocations{0.0, 1.0, 2.0}, 3);
        Matrix expected(3, 3);
        expected << 1, 0, 0, 1, 1, 1, 1, 2, 4;
        CHECK(V == expected);
    }
    SUBCASE("K = 1 is a column of ones") {
        CHECK(build_vandermonde(SampleLocations{-2.0, 5.0}, 1) == Matrix::Ones(2, 1));
    }
}

TEST_CASE("build_vandermonde rejects bad input") {
    CHECK_THROWS_AS(build_vandermonde(SampleLocations{1.0}, 0), InvalidInput);
    CHECK_THROWS_AS(SampleLocations({1.0, std::numeric_limits<double>::quiet_NaN()}), InvalidInput);
    CHECK_THROWS_AS(SampleLocations({std::numeric_limits<double>::infinity()}), InvalidInput);
    CHECK_THROWS_AS(SampleLocations{Vector()}, InvalidInput);
}

TEST_CASE("column recurrence holds bit for bit on every backend") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    Vector x(41);
    for (auto& v : x) v = u(rng);
    const SampleLocations locs(x);

    const auto original = kernels::active_backend();
    for (auto backend : {kernels::Backend::scalar, kernels::Backend::avx2}) {
        if (!kernels::set_active_backend(backend)) continue;
        const Matrix V = build_vandermonde(locs, 6);
        CHECK(V.col(0) == Vector::Ones(41));
        for (Eigen::Index k = 1; k < 6; ++k) {
            const Vector expected = V.col(k - 1).cwiseProduct(x);
            CHECK(V.col(k) == expected);
        }
    }
    kernels::set_active_backend(original);
}

TEST_CASE("ols_fit examples") {
    SUBCASE("exact line through two points") {
        const Matrix V = build_vandermonde(SampleLocations{0.0, 1.0}, 2);
        const Vector w = ols_fit(V, Vector{{3.0, 5.0}});
        CHECK(w[0] == doctest::Approx(3.0).epsilon(1e-14));
        CHECK(w[1] == doctest::Approx(2.0).epsilon(1e-14));
    }
    SUBCASE("overdetermined line fit matches 2x2 normal equations") {
        // Oracle: Cramer's rule on V^T V w = V^T y.
        const Vector x{{-1.0, 0.0, 1.0}};
        const Vector y{{1.0, 0.0, 1.0}};
        const double n = 3, sx = x.sum(), sxx = x.squaredNorm(), sy = y.sum(), sxy = x.dot(y);
        const double det = n * sxx - sx * sx;
        const double w0 = (sy * sxx - sx * sxy) / det;
        const double w1 = (n * sxy - sx * sy) / det;
        CHECK(w0 == doctest::Approx(2.0 / 3.0));
        CHECK(w1 == 0.0);

        const Vector w = ols_fit(build_vandermonde(SampleLocations(x), 2), y);
        CHECK(std::abs(w[0] - w0) <= 1e-14);
        CHECK(std::abs(w[1] - w1) <= 1e-14);
    }
    SUBCASE("consistent system recovers the planted coefficients") {
        const Matrix V = build_vandermonde(SampleLocations{0.0, 1.0, 2.0}, 3);
        const Vector planted{{1.0, -1.0, 2.0}};
        const Vector w = ols_fit(V, Vector(V * planted));
        CHECK((w - planted).norm() <= 1e-12);
    }
}

TEST_CASE("ols_fit reports rank deficiency with the numerical rank") {
    SUBCASE("duplicate locations") {
        const Matrix V = build_vandermonde(SampleLocations{1.0, 1.0, 1.0}, 2);
        try {
            ols_fit(V, Vector{{1.0, 2.0, 3.0}});
            FAIL("expected RankDeficient");
        } catch (const RankDeficient& e) {
            CHECK(e.rank() == 1);
            CHECK(e.required() == 2);
        }
    }
    SUBCASE("fewer rows than columns") {
        const Matrix V = build_vandermonde(SampleLocations{0.0, 1.0}, 3);
        CHECK_THROWS_AS(ols_fit(V, Vector{{1.0, 2.0}}), RankDeficient);
    }
    SUBCASE("length mismatch") {
        const Matrix V = build_vandermonde(SampleLocations{0.0, 1.0}, 2);
        CHECK_THROWS_AS(ols_fit(V, Vector{{1.0}}), InvalidInput);
    }
}

TEST_CASE("ols round trip on consistent systems (K <= 4, |x| <= 3)") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> loc(-3.0, 3.0);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index K = 1 + trial % 4;
        const Eigen::Index N = K + 1 + trial % 7;
        Vector x(N);
        for (auto& v : x) v = loc(rng);
        Matrix W(K, 3);
        for (auto& v : W.reshaped()) v = gauss(rng);
        const SampleLocations locs(x);
        const Matrix Y = synthesize_observations(locs, W);
        const Matrix W_fit = ols_fit(build_vandermonde(locs, K), Y);
        CHECK((W_fit - W).norm() <= 1e-8 * W.norm());
    }
}

TEST_CASE("synthesize_observations") {
    SUBCASE("two points, one polynomial") {
        Matrix W(2, 1);
        W << 1.5, -4.0;
        const Matrix Y = synthesize_observations(SampleLocations{0.0, 1.0}, W);
        CHECK(Y(0, 0) == 1.5);
        CHECK(Y(1, 0) == -2.5);
    }
    SUBCASE("zero coefficients give zero observations") {
        const Matrix Y = synthesize_observations(SampleLocations{0.3, -1.0, 2.0}, Matrix::Zero(3, 2));
        CHECK(Y.isZero(0.0));
    }
    SUBCASE("matches Horner evaluation") {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> gauss;
        Matrix W(3, 3);
        for (auto& v : W.reshaped()) v = gauss(rng);
        const SampleLocations x{0.0, 1.0, 2.0};
        const Matrix Y = synthesize_observations(x, W);
        for (Eigen::Index l = 0; l < 3; ++l) {
            for (Eigen::Index n = 0; n < 3; ++n) {
                CHECK(Y(n, l) == doctest::Approx(horner(W, l, x[n])).epsilon(1e-14));
            }
        }
    }
    SUBCASE("non-finite coefficients are rejected") {
        Matrix W = Matrix::Ones(2, 1);
        W(1, 0) = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(synthesize_observations(SampleLocations{0.0}, W), InvalidInput);
    }
}

TEST_CASE("differentiation_matrix") {
    CHECK(differentiation_matrix(1) == Matrix::Zero(1, 1));
    Matrix expected(3, 3);
    expected << 0, 1, 0, 0, 0, 2, 0, 0, 0;
    CHECK(differentiation_matrix(3) == expected);
    CHECK_THROWS_AS(differentiation_matrix(0), InvalidInput);
}

TEST_CASE("V D differentiates monomials") {
    // Oracle: d/dx x^k = k x^(k-1), evaluated with std::pow.
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> loc(-3.0, 3.0);
    for (Eigen::Index K = 1; K <= 6; ++K) {
        Vector x(12);
        for (auto& v : x) v = loc(rng);
        const Matrix VD = build_vandermonde(SampleLocations(x), K) * differentiation_matrix(K);
        double err = 0.0;
        for (Eigen::Index n = 0; n < x.size(); ++n) {
            err = std::max(err, std::abs(VD(n, 0)));
            for (Eigen::Index k = 1; k < K; ++k) {
                const double d = static_cast<double>(k) * std::pow(x[n], static_cast<double>(k - 1));
                err = std::max(err, std::abs(VD(n, k) - d));
            }
        }
        CAPTURE(K);
        CHECK(err <= 1e-12);
    }
}

TEST_CASE("condition_estimate") {
    CHECK(condition_estimate(build_vandermonde(SampleLocations{0.0}, 1)) == 1.0);

    SUBCASE("square matrix with duplicate rows is singular") {
        const Matrix V = build_vandermonde(SampleLocations{1.0, 1.0}, 2);
        CHECK(std::isinf(condition_estimate(V)));
    }
    SUBCASE("tall matrix with a duplicated row stays finite") {
        const Matrix V = build_vandermonde(SampleLocations{0.0, 1e-7, 1e-7, 1.0}, 3);
        const double c = condition_estimate(V);
        CHECK(std::isfinite(c));
        CHECK(c > 1e6);
    }
    SUBCASE("wide matrix is singular") {
        CHECK(std::isinf(condition_estimate(build_vandermonde(SampleLocations{0.0, 1.0}, 3))));
    }
    SUBCASE("agrees with an eigenvalue-based singular value oracle") {
        const Matrix V = build_vandermonde(SampleLocations(linspace(-3.0, 3.0, 30)), 4);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(V.transpose() * V);
        const Vector ev = eig.eigenvalues();  // ascending
        const double oracle = std::sqrt(ev[ev.size() - 1] / ev[0]);
        CHECK(std::abs(condition_estimate(V) - oracle) <= 1e-8 * oracle);
    }
}
