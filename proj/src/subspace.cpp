#include "blindpoly/subspace.hpp"

#include "blindpoly/error.hpp"
#include "blindpoly/seeding.hpp"
#include "blindpoly/vandermonde.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <optional>

namespace blindpoly {

namespace detail {
void throw_invalid_line_search_points() {
    throw InvalidInput("line search needs at least two interior points");
}
void throw_invalid_line_search_sizes() {
    throw InvalidInput("line search endpoints differ in length");
}
}  // namespace detail

SignalSubspace signal_subspace(const ObservationMatrix& Y, Eigen::Index K) {
    const Eigen::Index N = Y.rows();
    if (K < 1) throw InvalidInput("K must be at least 1");
    if (N <= K) throw InvalidInput(fmt::format("signal subspace needs N > K (N = {}, K = {})", N, K));
    if (!Y.allFinite()) throw InvalidInput("observation matrix must be finite");

    Eigen::JacobiSVD<Matrix> svd(Y, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    const Eigen::Index rank = numerical_rank(sv, Y.rows(), Y.cols());
    if (rank < K) {
        throw RankDeficient(
            fmt::format("observation matrix has numerical rank {} < K = {}; the signal subspace "
                        "is unidentifiable",
                        rank, K),
            rank, K);
    }

    SignalSubspace s;
    s.U = svd.matrixU().leftCols(K);
    s.P = Matrix::Identity(N, N) - s.U * s.U.transpose();
    return s;
}

namespace {

void check_rows(Eigen::Index rows, const SampleLocations& x) {
    if (rows != x.size()) throw InvalidInput("projector and locations differ in dimension");
}

double half_squared_norm(const Matrix& M) {
    return 0.5 * kernels::sum_squares({M.data(), static_cast<std::size_t>(M.size())});
}

Matrix complement_projection(const SignalSubspace& s, const Matrix& V) {
    Matrix M = V;
    M.noalias() -= s.U * (s.U.transpose() * V);
    return M;
}

// g_n = sum_k M(n, k) * k * V(n, k - 1), column by column.
Vector gradient_from(const Matrix& M, const Matrix& V) {
    const Eigen::Index N = V.rows();
    const auto n = static_cast<std::size_t>(N);
    Vector g = Vector::Zero(N);
    Vector dcol(N);
    for (Eigen::Index k = 1; k < V.cols(); ++k) {
        dcol = static_cast<double>(k) * V.col(k - 1);
        kernels::multiply_accumulate(as_span(g), {M.col(k).data(), n}, as_span(dcol));
    }
    return g;
}

}  // namespace

double objective(const Matrix& P, const SampleLocations& x, Eigen::Index K) {
    check_rows(P.rows(), x);
    const Matrix M = P * build_vandermonde(x, K);
    return half_squared_norm(M);
}

double objective(const SignalSubspace& s, const SampleLocations& x) {
    check_rows(s.rows(), x);
    return half_squared_norm(complement_projection(s, build_vandermonde(x, s.dimension())));
}

Vector gradient(const Matrix& P, const SampleLocations& x, Eigen::Index K) {
    check_rows(P.rows(), x);
    const Matrix V = build_vandermonde(x, K);
    const Matrix M = P * V;
    return gradient_from(M, V);
}

Vector gradient(const SignalSubspace& s, const SampleLocations& x) {
    check_rows(s.rows(), x);
    const Matrix V = build_vandermonde(x, s.dimension());
    return gradient_from(complement_projection(s, V), V);
}

SampleLocations scp_step(const SampleLocations& x, const Vector& grad, double rho) {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidInput("trust radius must be positive");
    if (grad.size() != x.size()) throw InvalidInput("gradient and locations differ in length");
    const double gnorm = grad.norm();
    if (gnorm == 0.0) return x;
    Vector out(x.size());
    kernels::axpby(1.0, x.span(), -std::sqrt(rho) / gnorm, as_span(grad), as_span(out));
    return SampleLocations(std::move(out));
}

LineSearchResult line_search(const SignalSubspace& s, const SampleLocations& x,
                             const SampleLocations& x_hat, int points) {
    auto f = [&s](const SampleLocations& z) { return objective(s, z); };
    return line_search(f, x, f(x), x_hat, points);
}

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::converged_objective: return "converged-objective";
        case Termination::converged_step: return "converged-step";
        case Termination::max_iterations: return "max-iterations";
    }
    return "unknown";
}

void ScpConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw InvalidInput(std::string("invalid SCP config: ") + what);
    };
    require(period >= 0.0 && std::isfinite(period), "period must be >= 0");
    require(initial_radius > 0.0, "initial_radius must be > 0");
    require(decay > 0.0 && decay <= 1.0, "decay must lie in (0, 1]");
    require(rho_floor > 0.0, "rho_floor must be > 0");
    require(grow >= 1.0, "grow must be >= 1");
    require(shrink > 0.0 && shrink < 1.0, "shrink must lie in (0, 1)");
    require(max_radius > 0.0, "max_radius must be > 0");
    require(max_iterations >= 0, "max_iterations must be >= 0");
    require(objective_tolerance >= 0.0, "objective_tolerance must be >= 0");
    require(step_tolerance >= 0.0, "step_tolerance must be >= 0");
    require(line_search_points >= 2, "line_search_points must be >= 2");
    require(num_restarts >= 0, "num_restarts must be >= 0");
    require(restart_scale >= 0.0, "restart_scale must be >= 0");
}

double geometric_radius(const ScpConfig& cfg, double period, int iteration) {
    const double rho0 = std::pow(cfg.initial_radius * period, 2);
    return std::max(rho0 * std::pow(cfg.decay, iteration), cfg.rho_floor);
}

CoefficientMatrix fit_coefficients(const SampleLocations& x, const ObservationMatrix& Y,
                                   Eigen::Index K) {
    if (Y.rows() != x.size()) throw InvalidInput("locations and observations differ in rows");
    const Matrix V = build_vandermonde(x, K);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(V);
    return cod.solve(Y);
}

double factorization_objective(const ObservationMatrix& Y, const SampleLocations& x,
                               const CoefficientMatrix& W) {
    if (Y.rows() != x.size() || Y.cols() != W.cols()) {
        throw InvalidInput("factorization objective: shape mismatch");
    }
    const Matrix R = build_vandermonde(x, W.rows()) * W - Y;
    return half_squared_norm(R);
}

Vector factorization_gradient(const ObservationMatrix& Y, const SampleLocations& x,
                              const CoefficientMatrix& W) {
    if (Y.rows() != x.size() || Y.cols() != W.cols()) {
        throw InvalidInput("factorization gradient: shape mismatch");
    }
    const Eigen::Index K = W.rows();
    const Matrix V = build_vandermonde(x, K);
    const Matrix R = V * W - Y;
    const Matrix VDW = V * differentiation_matrix(K) * W;
    const auto n = static_cast<std::size_t>(x.size());
    Vector g = Vector::Zero(x.size());
    for (Eigen::Index l = 0; l < W.cols(); ++l) {
        kernels::multiply_accumulate(as_span(g), {R.col(l).data(), n}, {VDW.col(l).data(), n});
    }
    return g;
}

namespace {

double resolve_period(const ScpConfig& cfg, const SampleLocations& x0) {
    if (cfg.period > 0.0) return cfg.period;
    const double span = x0.values().maxCoeff() - x0.values().minCoeff();
    if (x0.size() < 2 || !(span > 0.0)) {
        throw InvalidInput("cannot infer a sampling period from a constant starting point; "
                           "set ScpConfig::period");
    }
    return span / static_cast<double>(x0.size() - 1);
}

// Trust-radius bookkeeping shared by both solvers.
class TrustRadius {
public:
    TrustRadius(const ScpConfig& cfg, double period, Eigen::Index N)
        : cfg_(cfg), period_(period), rho_(std::pow(cfg.initial_radius * period, 2)),
          cap_(std::pow(cfg.max_radius * period, 2) * static_cast<double>(N)) {}

    double at(int iteration) const {
        return cfg_.radius_rule == RadiusRule::geometric
                   ? geometric_radius(cfg_, period_, iteration)
                   : rho_;
    }

    void update(bool accepted) {
        if (cfg_.radius_rule != RadiusRule::adaptive) return;
        rho_ = accepted ? std::min(rho_ * cfg_.grow, cap_) : rho_ * cfg_.shrink;
    }

    // Converged when the move (geometric) or the radius (adaptive) is negligible.
    bool converged(double step) const {
        if (cfg_.radius_rule == RadiusRule::geometric) return step < cfg_.step_tolerance;
        return std::sqrt(rho_) < cfg_.step_tolerance;
    }

private:
    const ScpConfig& cfg_;
    double period_;
    double rho_;
    double cap_;
};

// Affine representative with a fixed mean and standard deviation. f vanishes
// on constant vectors, so without this the iterates can drift toward a
// collapsed copy of the solution that meets the tolerance with a poor fit.
class ScaleAnchor {
public:
    explicit ScaleAnchor(const SampleLocations& x0)
        : mean_(x0.values().mean()), spread_(centered_norm(x0.values())) {}

    bool usable() const { return spread_ > 0.0; }

    std::optional<SampleLocations> operator()(const SampleLocations& z) const {
        const double m = z.values().mean();
        const double c = centered_norm(z.values());
        if (!(c > 0.0)) return std::nullopt;
        const Vector out = ((z.values().array() - m) * (spread_ / c) + mean_).matrix();
        if (!out.allFinite()) return std::nullopt;
        return SampleLocations(out);
    }

    // Removes the components along 1 and the centered iterate, the directions
    // the normalized objective is flat in.
    static Vector project(const Vector& g, const SampleLocations& x) {
        Vector c = x.values().array() - x.values().mean();
        Vector out = g.array() - g.mean();
        const double cc = c.squaredNorm();
        if (cc > 0.0) out -= (c.dot(out) / cc) * c;
        return out;
    }

private:
    static double centered_norm(const Vector& v) { return (v.array() - v.mean()).matrix().norm(); }

    double mean_;
    double spread_;
};

struct Stage {
    SampleLocations x;
    std::vector<double> trace;
    int iterations;
    Termination why;
};

// One SCP stage from x0. With an anchor, every accepted iterate is mapped back
// to the anchor's scale and the line search compares the rescaled values; the
// gradient drops its components along 1 and x, where that objective is flat.
Stage run_scp(const SignalSubspace& s, const SampleLocations& x0, const ScpConfig& cfg,
              double period, double tolerance, const ScaleAnchor* anchor) {
    auto value = [&](const SampleLocations& z) {
        if (!anchor) return objective(s, z);
        const auto n = (*anchor)(z);
        return n ? objective(s, *n) : std::numeric_limits<double>::infinity();
    };

    SampleLocations x = x0;
    double fx = objective(s, x);
    std::vector<double> trace{fx};
    TrustRadius radius(cfg, period, x0.size());
    Termination why = Termination::max_iterations;
    int r = 0;

    for (;; ++r) {
        if (fx < tolerance) {
            why = Termination::converged_objective;
            break;
        }
        if (r == cfg.max_iterations) break;

        Vector g = gradient(s, x);
        if (anchor) g = ScaleAnchor::project(g, x);
        if (g.norm() == 0.0) {
            why = Termination::converged_step;
            break;
        }
        const SampleLocations x_hat = scp_step(x, g, radius.at(r));
        auto ls = line_search(value, x, fx, x_hat, cfg.line_search_points);
        if (anchor && ls.value < fx) ls.next = *(*anchor)(ls.next);
        const double step = (ls.next.values() - x.values()).norm();
        radius.update(ls.value < fx);
        x = std::move(ls.next);
        fx = ls.value;
        trace.push_back(fx);

        if (fx >= tolerance && radius.converged(step)) {
            ++r;
            why = Termination::converged_step;
            break;
        }
    }
    return {std::move(x), std::move(trace), r, why};
}

double stage_tolerance(const ScpConfig& cfg, const SampleLocations& start, Eigen::Index K) {
    return cfg.objective_tolerance * build_vandermonde(start, K).squaredNorm();
}

SolverReport solve_from(const ObservationMatrix& Y, const SignalSubspace& s,
                        const SampleLocations& start, const ScaleAnchor& anchor,
                        const ScpConfig& cfg, double period) {
    const Eigen::Index K = s.dimension();
    double tolerance = stage_tolerance(cfg, start, K);
    Stage search = run_scp(s, start, cfg, period, tolerance, nullptr);

    SolverReport report{search.x, {}, std::move(search.trace), {}, search.iterations,
                        search.why, tolerance, 0};
    // Nothing moved, so there is nothing to rescale.
    if (cfg.polish && anchor.usable() && search.iterations > 0) {
        if (const auto rescaled = anchor(search.x)) {
            tolerance = stage_tolerance(cfg, *rescaled, K);
            Stage polish = run_scp(s, *rescaled, cfg, period, tolerance, &anchor);
            report.x_hat = std::move(polish.x);
            report.polish_trace = std::move(polish.trace);
            report.iterations += polish.iterations;
            report.termination = polish.why;
            report.objective_tolerance = tolerance;
        }
    }
    report.W_hat = fit_coefficients(report.x_hat, Y, K);
    return report;
}

}  // namespace

SolverReport solve_subspace(const ObservationMatrix& Y, const SampleLocations& x0,
                            Eigen::Index K, const ScpConfig& cfg) {
    cfg.validate();
    if (x0.size() != Y.rows()) throw InvalidInput("x0 length must equal the rows of Y");
    const SignalSubspace s = signal_subspace(Y, K);
    const double period = resolve_period(cfg, x0);
    const ScaleAnchor anchor(x0);

    std::optional<SolverReport> best;
    for (int restart = 0; restart <= cfg.num_restarts; ++restart) {
        SampleLocations start = x0;
        if (restart > 0) {
            auto rng = make_stream(cfg.restart_seed, static_cast<std::uint64_t>(restart));
            const double half_width = cfg.restart_scale * period;
            std::uniform_real_distribution<double> jitter(-half_width, half_width);
            Vector v = x0.values();
            for (Eigen::Index n = 0; n < v.size(); ++n) v[n] += jitter(rng);
            start = SampleLocations(std::move(v));
        }
        SolverReport report = solve_from(Y, s, start, anchor, cfg, period);
        report.restart_index = restart;
        if (!best || report.final_objective() < best->final_objective()) best = std::move(report);
    }
    return std::move(*best);
}

SolverReport alternating_minimization(const ObservationMatrix& Y, const SampleLocations& x0,
                                      Eigen::Index K, int max_outer, double tolerance,
                                      const ScpConfig& cfg) {
    cfg.validate();
    const Eigen::Index N = Y.rows();
    if (K < 1 || N <= K) throw InvalidInput("alternating minimization needs N > K >= 1");
    if (x0.size() != N) throw InvalidInput("x0 length must equal the rows of Y");
    if (max_outer < 0 || tolerance < 0.0) throw InvalidInput("invalid alternating-minimization limits");
    if (!Y.allFinite()) throw InvalidInput("observation matrix must be finite");

    const double period = resolve_period(cfg, x0);
    const double abs_tol = tolerance * Y.squaredNorm();

    SampleLocations x = x0;
    CoefficientMatrix W = fit_coefficients(x, Y, K);
    double h = factorization_objective(Y, x, W);
    std::vector<double> trace{h};
    TrustRadius radius(cfg, period, N);
    Termination why = Termination::max_iterations;
    int r = 0;

    for (;; ++r) {
        if (h <= abs_tol) {
            why = Termination::converged_objective;
            break;
        }
        if (r == max_outer) break;

        // x-pass with W held fixed.
        const Vector g = factorization_gradient(Y, x, W);
        double step = 0.0;
        if (g.norm() > 0.0) {
            const SampleLocations x_hat = scp_step(x, g, radius.at(r));
            auto ls = line_search(
                [&](const SampleLocations& z) { return factorization_objective(Y, z, W); }, x, h,
                x_hat, cfg.line_search_points);
            step = (ls.next.values() - x.values()).norm();
            radius.update(ls.value < h);
            x = std::move(ls.next);
            h = ls.value;
        } else {
            radius.update(false);
        }

        // Exact W update; keep the old W if roundoff makes the refit worse.
        CoefficientMatrix W_new = fit_coefficients(x, Y, K);
        const double h_new = factorization_objective(Y, x, W_new);
        if (h_new <= h) {
            W = std::move(W_new);
            h = h_new;
        }
        trace.push_back(h);

        if (h > abs_tol && (g.norm() == 0.0 || radius.converged(step))) {
            ++r;
            why = Termination::converged_step;
            break;
        }
    }

    return SolverReport{x, W, std::move(trace), {}, r, why, abs_tol, 0};
}

}  // namespace blindpoly
