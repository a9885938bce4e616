#pragma once

// Clock-jitter scenario: nominal uniform sampling instants u_n with period T,
// actual instants x_n = u_n + j_n where j_n is a zero-mean Gaussian with
// standard deviation sigma = delta * T / 2, truncated to [-sigma, sigma].
// Adjacent samples can swap order exactly when delta >= 1.

#include "blindpoly/types.hpp"

#include <cstdint>

namespace blindpoly {

struct JitterScenario {
    Eigen::Index N = 30;
    double domain_lo = -3.0;
    double domain_hi = 3.0;
    double delta = 1.0;
    Eigen::Index K = 3;
    Eigen::Index L = 3;
    std::uint64_t seed = 0;

    /// (domain_hi - domain_lo) / (N - 1).
    double period() const;

    /// Throws InvalidInput unless N >= 2, lo < hi, delta > 0, K >= 1, L >= K.
    void validate() const;
};

struct JitterInstance {
    JitterScenario scenario;
    SampleLocations uniform_locations;
    SampleLocations true_locations;
    CoefficientMatrix W_true;
    ObservationMatrix Y;
};

/// Deterministic in scenario.seed. Jitter and coefficients come from
/// separate sub-streams; W_true entries are i.i.d. standard normal.
JitterInstance generate(const JitterScenario& scenario);

/// Nominal grid u_n = lo + (hi - lo) n / (N - 1); u_{N-1} == hi exactly.
SampleLocations uniform_locations(const JitterScenario& scenario);

/// One draw from N(0, 1) truncated to [-1, 1], by rejection.
template <class Engine>
double truncated_standard_normal(Engine& rng);

/// Whether adjacent samples may overlap: delta >= 1.
bool overlap_possible(const JitterScenario& scenario);

}  // namespace blindpoly

#include <random>

template <class Engine>
double blindpoly::truncated_standard_normal(Engine& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (;;) {
        const double z = gauss(rng);
        if (z >= -1.0 && z <= 1.0) return z;
    }
}
