#include "blindpoly/ambiguity.hpp"
#include "blindpoly/error.hpp"
#include "blindpoly/jitter.hpp"
#include "blindpoly/subspace.hpp"
#include "blindpoly/vandermonde.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace blindpoly;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> gauss;
    Matrix m(r, c);
    for (auto& v : m.reshaped()) v = gauss(rng);
    return m;
}

SampleLocations random_locations(std::mt19937_64& rng, Eigen::Index n) {
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    Vector v(n);
    for (auto& e : v) e = u(rng);
    return SampleLocations(v);
}

// Central differences of f(x) = 1/2 ||P V(x)||^2, with f written out directly.
Vector fd_gradient(const Matrix& P, const SampleLocations& x, Eigen::Index K) {
    auto f = [&](const Vector& z) {
        Matrix V(z.size(), K);
        for (Eigen::Index n = 0; n < z.size(); ++n)
            for (Eigen::Index k = 0; k < K; ++k) V(n, k) = std::pow(z[n], static_cast<double>(k));
        return 0.5 * (P * V).squaredNorm();
    };
    const Vector x0 = x.values();
    const double h = 1e-6 * std::max(1.0, x0.cwiseAbs().maxCoeff());
    Vector g(x0.size());
    for (Eigen::Index n = 0; n < x0.size(); ++n) {
        Vector xp = x0, xm = x0;
        xp[n] += h;
        xm[n] -= h;
        g[n] = (f(xp) - f(xm)) / (2 * h);
    }
    return g;
}

double rel_inf(const Vector& a, const Vector& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

JitterInstance instance(double delta, std::uint64_t seed) {
    JitterScenario s;
    s.delta = delta;
    s.seed = seed;
    return generate(s);
}

}  // namespace

TEST_CASE("signal_subspace") {
    SUBCASE("coordinate columns") {
        Matrix Y = Matrix::Zero(3, 2);
        Y(0, 0) = 1.0;
        Y(1, 1) = 1.0;
        const auto s = signal_subspace(Y, 2);
        Matrix expected = Matrix::Zero(3, 3);
        expected(2, 2) = 1.0;
        CHECK((s.P - expected).cwiseAbs().maxCoeff() <= 1e-15);
    }
    SUBCASE("projector invariants") {
        std::mt19937_64 rng(1);
        for (int trial = 0; trial < 20; ++trial) {
            const Eigen::Index K = 1 + trial % 4, N = K + 3 + trial % 5;
            const auto s = signal_subspace(random_matrix(rng, N, K + 1), K);
            const Matrix I = Matrix::Identity(N, N);
            CHECK((s.P * s.P - s.P).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK((s.P - s.P.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK(std::abs(s.P.trace() - static_cast<double>(N - K)) <= 1e-12);
            CHECK((s.U.transpose() * s.U - Matrix::Identity(K, K)).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK((s.P + s.U * s.U.transpose() - I).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
    SUBCASE("planted Vandermonde lies in the signal subspace") {
        const auto inst = instance(5.0, 3);
        const auto s = signal_subspace(inst.Y, 3);
        const Matrix V = build_vandermonde(inst.true_locations, 3);
        CHECK((s.P * V).norm() <= 1e-10 * V.norm());
    }
    SUBCASE("errors") {
        Matrix Y = Matrix::Zero(4, 2);
        Y.col(0).setOnes();
        Y.col(1).setOnes();
        try {
            signal_subspace(Y, 2);
            FAIL("expected RankDeficient");
        } catch (const RankDeficient& e) {
            CHECK(e.rank() == 1);
        }
        CHECK_THROWS_AS(signal_subspace(Matrix::Ones(2, 2), 2), InvalidInput);
    }
}

TEST_CASE("objective") {
    const auto inst = instance(5.0, 4);
    const auto s = signal_subspace(inst.Y, 3);
    const Matrix V = build_vandermonde(inst.true_locations, 3);

    CHECK(objective(Matrix::Zero(30, 30), inst.true_locations, 3) == 0.0);
    CHECK(objective(s, inst.true_locations) <= 1e-20 * V.squaredNorm());

    SUBCASE("flat along the affine family") {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> a(-2.0, 2.0), b(0.2, 2.0);
        for (int i = 0; i < 50; ++i) {
            const auto moved = apply_transform(PascalTransform(a(rng), b(rng)), inst.true_locations);
            const double scale = build_vandermonde(moved, 3).squaredNorm();
            CHECK(objective(s, moved) <= 1e-12 * scale);
        }
    }
    SUBCASE("projector and basis forms agree") {
        std::mt19937_64 rng(3);
        for (int i = 0; i < 20; ++i) {
            const auto x = random_locations(rng, 30);
            const double a = objective(s.P, x, 3), b = objective(s, x);
            CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, a));
        }
    }
}

TEST_CASE("gradient") {
    std::mt19937_64 rng(10);

    SUBCASE("K = 1 has a constant Vandermonde") {
        const auto s = signal_subspace(random_matrix(rng, 6, 1), 1);
        CHECK(gradient(s, random_locations(rng, 6)).isZero(0.0));
    }
    SUBCASE("vanishes at the truth") {
        const auto inst = instance(5.0, 5);
        const auto s = signal_subspace(inst.Y, 3);
        CHECK(gradient(s, inst.true_locations).cwiseAbs().maxCoeff() <= 1e-9);
    }
    SUBCASE("matches central differences") {
        double worst = 0.0;
        for (int trial = 0; trial < 200; ++trial) {
            const Eigen::Index K = 1 + trial % 5;
            const Eigen::Index N = K + 2 + trial % 10;
            const auto s = signal_subspace(random_matrix(rng, N, K), K);
            const auto x = random_locations(rng, N);
            worst = std::max(worst, rel_inf(gradient(s.P, x, K), fd_gradient(s.P, x, K)));
            CHECK(rel_inf(gradient(s, x), gradient(s.P, x, K)) <= 1e-12);
        }
        CHECK(worst <= 1e-5);
    }
}

TEST_CASE("scp_step") {
    SUBCASE("hand-computed step") {
        Matrix P = Matrix::Zero(2, 2);
        P(0, 0) = 1.0;
        const SampleLocations x{3.0, -1.0};
        // V = [[1, 3], [1, -1]], PV = [[1, 3], [0, 0]], g_0 = 3 * 1, g_1 = 0.
        const Vector g = gradient(P, x, 2);
        CHECK(g[0] == 3.0);
        CHECK(g[1] == 0.0);
        const auto next = scp_step(x, g, 4.0);
        CHECK(next[0] == 1.0);
        CHECK(next[1] == -1.0);
    }
    SUBCASE("zero gradient keeps the point") {
        const SampleLocations x{0.5, 1.5};
        CHECK(scp_step(x, Vector::Zero(2), 1.0) == x);
    }
    SUBCASE("lands on the trust boundary") {
        std::mt19937_64 rng(6);
        const auto x = random_locations(rng, 9);
        const Vector g = random_matrix(rng, 9, 1);
        const auto next = scp_step(x, g, 0.09);
        CHECK((next.values() - x.values()).norm() == doctest::Approx(0.3).epsilon(1e-14));
        CHECK((next.values() - x.values()).dot(g) < 0.0);
    }
}

TEST_CASE("line_search") {
    SUBCASE("identical endpoints return alpha = 1") {
        const SampleLocations x{0.0, 1.0, 2.0};
        auto f = [](const SampleLocations& z) { return z.values().squaredNorm(); };
        const auto r = line_search(f, x, f(x), x, 8);
        CHECK(r.alpha == 1.0);
        CHECK(r.next == x);
    }
    SUBCASE("quadratic objective picks the grid point nearest the exact minimizer") {
        // K = 2: f(z) = 1/2 ||P [1, z]||^2, quadratic in alpha along the segment.
        std::mt19937_64 rng(8);
        for (int trial = 0; trial < 50; ++trial) {
            const auto s = signal_subspace(random_matrix(rng, 7, 2), 2);
            const auto x = random_locations(rng, 7), xh = random_locations(rng, 7);
            const int points = 32;
            const auto r = line_search(s, x, xh, points);

            // z(alpha) = xh + alpha d, d = x - xh; f = 1/2 ||P1||^2 + 1/2 ||P xh + alpha P d||^2.
            const Vector d = x.values() - xh.values();
            const Vector Pd = s.P * d, Pxh = s.P * xh.values();
            const double a_star = std::clamp(-Pxh.dot(Pd) / Pd.squaredNorm(), 0.0, 1.0);
            CHECK(std::abs(r.alpha - a_star) <= 1.0 / (points + 1) + 1e-12);
            CHECK(r.value <= objective(s, x));
            CHECK(r.value == doctest::Approx(objective(s, r.next)).epsilon(1e-12));
        }
    }
    SUBCASE("argument checks") {
        const SampleLocations x{0.0, 1.0};
        auto f = [](const SampleLocations&) { return 0.0; };
        CHECK_THROWS_AS(line_search(f, x, 0.0, x, 1), InvalidInput);
        CHECK_THROWS_AS(line_search(f, x, 0.0, SampleLocations{0.0}, 4), InvalidInput);
    }
}

TEST_CASE("ScpConfig validation and radius schedule") {
    ScpConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.shrink = 1.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.line_search_points = 1;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);

    cfg = {};
    CHECK(geometric_radius(cfg, 2.0, 0) == doctest::Approx(1.0));
    CHECK(geometric_radius(cfg, 2.0, 1) == doctest::Approx(0.95));
    CHECK(geometric_radius(cfg, 2.0, 100000) == cfg.rho_floor);
}

TEST_CASE("solve_subspace") {
    SUBCASE("starting at the truth stops immediately") {
        const auto inst = instance(5.0, 11);
        const auto rep = solve_subspace(inst.Y, inst.true_locations, 3);
        CHECK(rep.iterations == 0);
        CHECK(rep.termination == Termination::converged_objective);
        CHECK(rep.x_hat == inst.true_locations);
        CHECK(rep.polish_trace.empty());
    }
    SUBCASE("moderate jitter is corrected from the uniform grid") {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const auto inst = instance(5.0, seed);
            const auto rep = solve_subspace(inst.Y, inst.uniform_locations, 3);
            CAPTURE(seed);
            CHECK(pne(rep.x_hat, inst.true_locations, inst.scenario.period()).value <= 1e-6);
            CHECK(std::is_sorted(rep.objective_trace.rbegin(), rep.objective_trace.rend()));
            CHECK(std::is_sorted(rep.polish_trace.rbegin(), rep.polish_trace.rend()));
            const std::size_t stages = rep.polish_trace.empty() ? 1 : 2;
            CHECK(rep.objective_trace.size() + rep.polish_trace.size() ==
                  static_cast<std::size_t>(rep.iterations) + stages);
        }
    }
    SUBCASE("polish returns the estimate at the starting scale") {
        const auto inst = instance(60.0, 26);
        const auto rep = solve_subspace(inst.Y, inst.uniform_locations, 3);
        REQUIRE_FALSE(rep.polish_trace.empty());
        const Vector u = inst.uniform_locations.values(), x = rep.x_hat.values();
        auto spread = [](const Vector& v) { return (v.array() - v.mean()).matrix().norm(); };
        CHECK(x.mean() == doctest::Approx(u.mean()).scale(1.0).epsilon(1e-12));
        CHECK(spread(x) == doctest::Approx(spread(u)).epsilon(1e-12));
        CHECK(rep.final_objective() == rep.polish_trace.back());
        CHECK(rep.termination == Termination::converged_objective);
        CHECK(rep.final_objective() < rep.objective_tolerance);
    }
    SUBCASE("polish improves on the search stage alone") {
        ScpConfig raw;
        raw.polish = false;
        int better = 0;
        for (std::uint64_t seed : {26u, 34u, 37u}) {
            const auto inst = instance(60.0, seed);
            const auto a = solve_subspace(inst.Y, inst.uniform_locations, 3, raw);
            const auto b = solve_subspace(inst.Y, inst.uniform_locations, 3);
            CHECK(a.polish_trace.empty());
            const double p = inst.scenario.period();
            if (pne(b.x_hat, inst.true_locations, p).value < pne(a.x_hat, inst.true_locations, p).value) ++better;
        }
        CHECK(better >= 2);
    }
    SUBCASE("geometric rule keeps a monotone trace") {
        ScpConfig cfg;
        cfg.radius_rule = RadiusRule::geometric;
        cfg.max_iterations = 300;
        const auto inst = instance(30.0, 4);
        const auto rep = solve_subspace(inst.Y, inst.uniform_locations, 3, cfg);
        CHECK(std::is_sorted(rep.objective_trace.rbegin(), rep.objective_trace.rend()));
        CHECK(std::is_sorted(rep.polish_trace.rbegin(), rep.polish_trace.rend()));
        CHECK(rep.objective_trace.front() > rep.objective_trace.back());
    }
    SUBCASE("restarts never do worse than the plain run") {
        const auto inst = instance(60.0, 9);
        ScpConfig plain;
        plain.max_iterations = 50;
        ScpConfig multi = plain;
        multi.num_restarts = 3;
        const auto a = solve_subspace(inst.Y, inst.uniform_locations, 3, plain);
        const auto b = solve_subspace(inst.Y, inst.uniform_locations, 3, multi);
        CHECK(b.final_objective() <= a.final_objective());
        CHECK(b.restart_index >= 0);
        CHECK(b.restart_index <= 3);
    }
    SUBCASE("rank-deficient observations are rejected") {
        const auto inst = instance(5.0, 1);
        Matrix Y = inst.Y;
        Y.col(2) = Y.col(0) + Y.col(1);
        CHECK_THROWS_AS(solve_subspace(Y, inst.uniform_locations, 3), RankDeficient);
    }
}

TEST_CASE("alternating minimization baseline") {
    const auto inst = instance(5.0, 21);

    SUBCASE("truth is a fixed point") {
        const auto rep = alternating_minimization(inst.Y, inst.true_locations, 3, 100, 1e-16);
        CHECK(2.0 * rep.final_objective() <= 1e-16 * inst.Y.squaredNorm());
    }
    SUBCASE("objective trace is non-increasing") {
        const auto rep = alternating_minimization(inst.Y, inst.uniform_locations, 3, 200, 1e-16);
        CHECK(std::is_sorted(rep.objective_trace.rbegin(), rep.objective_trace.rend()));
        CHECK(rep.final_objective() < rep.objective_trace.front());
    }
    SUBCASE("factorization gradient matches central differences") {
        std::mt19937_64 rng(4);
        for (int trial = 0; trial < 50; ++trial) {
            const auto x = random_locations(rng, 12);
            const Matrix W = random_matrix(rng, 3, 2);
            const Matrix Y = random_matrix(rng, 12, 2);
            const Vector g = factorization_gradient(Y, x, W);
            const double h = 1e-6 * std::max(1.0, x.values().cwiseAbs().maxCoeff());
            Vector fd(12);
            for (Eigen::Index n = 0; n < 12; ++n) {
                Vector xp = x.values(), xm = x.values();
                xp[n] += h;
                xm[n] -= h;
                fd[n] = (factorization_objective(Y, SampleLocations(xp), W) -
                         factorization_objective(Y, SampleLocations(xm), W)) / (2 * h);
            }
            CHECK(rel_inf(g, fd) <= 1e-5);
        }
    }
}
