#pragma once

// Subspace fitting for Y = V(x) W.
//
// With U the leading K left singular vectors of Y and P = I - U U^T, the
// locations are estimated by minimizing
//
//     f(x) = 1/2 || P V(x) ||_F^2,
//
// which vanishes exactly on the affine family t0 + t1 * x_true. The
// minimization is sequential convex programming: linearize f at the current
// iterate, minimize the linear model over an l2 trust ball (closed form),
// then keep the best point on the segment between the old and new iterate.

#include "blindpoly/kernels.hpp"
#include "blindpoly/types.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace blindpoly {

/// Orthonormal basis of range(Y) and the projector onto its complement.
struct SignalSubspace {
    Matrix U;  // N x K, orthonormal columns
    Matrix P;  // N x N, I - U U^T

    Eigen::Index rows() const noexcept { return U.rows(); }
    Eigen::Index dimension() const noexcept { return U.cols(); }
};

/// Throws RankDeficient if sigma_K(Y) is at or below the rank tolerance, and
/// InvalidInput unless N > K.
SignalSubspace signal_subspace(const ObservationMatrix& Y, Eigen::Index K);

/// f(x) with an explicit projector.
double objective(const Matrix& P, const SampleLocations& x, Eigen::Index K);

/// f(x) evaluated as ||V - U (U^T V)||^2 / 2, avoiding the N x N product.
double objective(const SignalSubspace& s, const SampleLocations& x);

/// Gradient of f: g_n = < row n of P V(x), row n of V(x) D >, with D the
/// differentiation matrix. No N x N intermediate beyond P V(x).
Vector gradient(const Matrix& P, const SampleLocations& x, Eigen::Index K);
Vector gradient(const SignalSubspace& s, const SampleLocations& x);

/// Minimizer of the linearization of f at x over ||z - x||_2^2 <= rho:
/// x - sqrt(rho) g / ||g||, or x itself when g == 0.
SampleLocations scp_step(const SampleLocations& x, const Vector& grad, double rho);

struct LineSearchResult {
    double alpha;  // weight on the current iterate: next = alpha x + (1 - alpha) x_hat
    SampleLocations next;
    double value;  // f(next)
};

namespace detail {
[[noreturn]] void throw_invalid_line_search_points();
[[noreturn]] void throw_invalid_line_search_sizes();
}  // namespace detail

/// Best point of alpha x + (1 - alpha) x_hat over alpha in {0, 1} and the
/// interior grid {1, ..., points} / (points + 1). alpha = 1 is evaluated
/// first and replaced only on strict improvement, so f(next) <= f(x).
template <class F>
LineSearchResult line_search(F&& f, const SampleLocations& x, double fx,
                             const SampleLocations& x_hat, int points);

LineSearchResult line_search(const SignalSubspace& s, const SampleLocations& x,
                             const SampleLocations& x_hat, int points);

enum class Termination { converged_objective, converged_step, max_iterations };

std::string_view to_string(Termination t);

enum class RadiusRule {
    /// Grow the radius after an accepted step, shrink it after a rejected one.
    adaptive,
    /// rho(r) = rho_0 * decay^r, floored at rho_floor.
    geometric,
};

struct ScpConfig {
    RadiusRule radius_rule = RadiusRule::adaptive;
    /// Sampling period used to scale the initial radius and restart
    /// perturbations. 0 means infer from x0 as (max - min) / (N - 1).
    double period = 0.0;
    /// rho_0 = (initial_radius * period)^2.
    double initial_radius = 0.5;
    double decay = 0.95;          // geometric only
    double rho_floor = 1e-12;     // geometric only
    double grow = 2.0;            // adaptive only
    double shrink = 0.25;         // adaptive only
    /// Adaptive radius cap: rho <= (max_radius * period)^2 * N.
    double max_radius = 10.0;

    int max_iterations = 5000;
    /// Stop when f < objective_tolerance * ||V(x0)||_F^2.
    double objective_tolerance = 1e-16;
    /// Stop when the accepted step, or for the adaptive rule the trust
    /// radius sqrt(rho), falls below this.
    double step_tolerance = 1e-10;
    int line_search_points = 32;
    /// After the search stage, rescale the estimate to the mean and spread of
    /// x0 and continue with every iterate held at that scale. f vanishes on
    /// constant vectors, so the search stage tends to finish on a shrunken
    /// copy of the solution that meets the tolerance with a poorer fit.
    bool polish = true;

    int num_restarts = 0;
    /// Restart perturbations are uniform on [-restart_scale T, restart_scale T].
    double restart_scale = 0.5;
    std::uint64_t restart_seed = 0;

    /// Throws InvalidInput on out-of-range fields.
    void validate() const;
};

/// Trust radius rho(r) of the geometric rule.
double geometric_radius(const ScpConfig& cfg, double period, int iteration);

struct SolverReport {
    SampleLocations x_hat;
    CoefficientMatrix W_hat;
    std::vector<double> objective_trace;  // search stage: f(x^0), f(x^1), ...
    std::vector<double> polish_trace;     // polish stage, empty when it did not run
    int iterations = 0;                   // both stages
    Termination termination = Termination::max_iterations;  // of the last stage
    double objective_tolerance = 0.0;     // absolute tolerance of the last stage
    int restart_index = 0;

    double final_objective() const {
        return polish_trace.empty() ? objective_trace.back() : polish_trace.back();
    }
};

/// SCP from x0 (and from perturbed copies when cfg.num_restarts > 0), then
/// the polish stage; the lowest final objective wins, earlier restart on ties.
/// Each stage stops when f < objective_tolerance * ||V(start)||_F^2.
/// W_hat = pinv(V(x_hat)) Y.
SolverReport solve_subspace(const ObservationMatrix& Y, const SampleLocations& x0,
                            Eigen::Index K, const ScpConfig& cfg = {});

/// Baseline for 1/2 ||Y - V(x) W||_F^2: alternate the exact W update with one
/// trust-region first-order pass on x. Objective trace holds the value after
/// each W update and is non-increasing.
SolverReport alternating_minimization(const ObservationMatrix& Y, const SampleLocations& x0,
                                      Eigen::Index K, int max_outer, double tolerance,
                                      const ScpConfig& cfg = {});

/// Gradient in x of 1/2 ||Y - V(x) W||_F^2 for fixed W.
Vector factorization_gradient(const ObservationMatrix& Y, const SampleLocations& x,
                              const CoefficientMatrix& W);

/// 1/2 ||Y - V(x) W||_F^2.
double factorization_objective(const ObservationMatrix& Y, const SampleLocations& x,
                               const CoefficientMatrix& W);

/// pinv(V(x)) Y via complete orthogonal decomposition; tolerates rank loss.
CoefficientMatrix fit_coefficients(const SampleLocations& x, const ObservationMatrix& Y,
                                   Eigen::Index K);

template <class F>
LineSearchResult line_search(F&& f, const SampleLocations& x, double fx,
                             const SampleLocations& x_hat, int points) {
    if (points < 2) detail::throw_invalid_line_search_points();
    if (x.size() != x_hat.size()) detail::throw_invalid_line_search_sizes();
    LineSearchResult best{1.0, x, fx};
    Vector trial(x.size());
    auto consider = [&](double alpha) {
        kernels::axpby(alpha, x.span(), 1.0 - alpha, x_hat.span(), as_span(trial));
        if (!trial.allFinite()) return;
        SampleLocations candidate(trial);
        const double value = f(candidate);
        if (value < best.value) best = {alpha, std::move(candidate), value};
    };
    consider(0.0);
    for (int i = 1; i <= points; ++i) consider(static_cast<double>(i) / (points + 1));
    return best;
}

}  // namespace blindpoly
