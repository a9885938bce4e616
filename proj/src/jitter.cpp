#include "blindpoly/jitter.hpp"

#include "blindpoly/error.hpp"
#include "blindpoly/seeding.hpp"
#include "blindpoly/vandermonde.hpp"

#include <cmath>
#include <random>

namespace blindpoly {

namespace {
constexpr std::uint64_t kJitterStream = 1;
constexpr std::uint64_t kCoefficientStream = 2;
}  // namespace

double JitterScenario::period() const {
    return (domain_hi - domain_lo) / static_cast<double>(N - 1);
}

void JitterScenario::validate() const {
    if (N < 2) throw InvalidInput("jitter scenario needs N >= 2");
    if (!std::isfinite(domain_lo) || !std::isfinite(domain_hi) || !(domain_lo < domain_hi)) {
        throw InvalidInput("jitter scenario needs a finite domain with lo < hi");
    }
    if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidInput("jitter delta must be > 0");
    if (K < 1) throw InvalidInput("jitter scenario needs K >= 1");
    if (L < K) throw InvalidInput("jitter scenario needs L >= K");
}

SampleLocations uniform_locations(const JitterScenario& scenario) {
    scenario.validate();
    const double width = scenario.domain_hi - scenario.domain_lo;
    Vector u(scenario.N);
    for (Eigen::Index n = 0; n < scenario.N; ++n) {
        u[n] = scenario.domain_lo +
               width * static_cast<double>(n) / static_cast<double>(scenario.N - 1);
    }
    return SampleLocations(std::move(u));
}

JitterInstance generate(const JitterScenario& scenario) {
    scenario.validate();
    SampleLocations u = uniform_locations(scenario);
    const double sigma = scenario.delta * scenario.period() / 2.0;

    auto jitter_rng = make_stream(scenario.seed, kJitterStream);
    Vector x = u.values();
    for (Eigen::Index n = 0; n < scenario.N; ++n) {
        x[n] += sigma * truncated_standard_normal(jitter_rng);
    }

    auto coef_rng = make_stream(scenario.seed, kCoefficientStream);
    std::normal_distribution<double> gauss(0.0, 1.0);
    CoefficientMatrix W(scenario.K, scenario.L);
    for (Eigen::Index l = 0; l < scenario.L; ++l) {
        for (Eigen::Index k = 0; k < scenario.K; ++k) W(k, l) = gauss(coef_rng);
    }

    SampleLocations x_true(std::move(x));
    ObservationMatrix Y = synthesize_observations(x_true, W);
    return JitterInstance{scenario, std::move(u), std::move(x_true), std::move(W), std::move(Y)};
}

bool overlap_possible(const JitterScenario& scenario) {
    return scenario.delta >= 1.0;
}

}  // namespace blindpoly
