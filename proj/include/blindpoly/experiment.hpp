#pragma once

// Monte-Carlo jitter-correction experiments: generate instances, solve from
// the uniform grid, score with PNE, aggregate per (K, L, delta) cell.

#include "blindpoly/jitter.hpp"
#include "blindpoly/selection.hpp"
#include "blindpoly/subspace.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace blindpoly {

enum class SolverKind { subspace_scp, selection_exhaustive, alternating_baseline };

std::string_view to_string(SolverKind kind);
std::optional<SolverKind> parse_solver(std::string_view name);

struct ExperimentConfig {
    std::vector<Eigen::Index> K_values{3};
    std::vector<Eigen::Index> L_values{3};
    std::vector<double> deltas{5.0};
    Eigen::Index N = 30;
    double domain_lo = -3.0;
    double domain_hi = 3.0;
    int runs = 100;
    SolverKind solver = SolverKind::subspace_scp;
    ScpConfig scp;
    Eigen::Index grid_size = 60;   // selection solver
    double selection_budget = 1e7;  // selection solver
    int am_max_outer = 5000;        // alternating baseline
    double am_tolerance = 1e-16;    // alternating baseline, relative to ||Y||_F^2
    std::uint64_t master_seed = 1;
    unsigned jobs = 1;
    std::filesystem::path output_dir = "results";

    /// (K, L) combinations with L >= K, in K-major order.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> cells() const;

    void validate() const;
};

/// Reads the JSON config format; keys mirror the field names above, with
/// "K", "L", "delta" accepting a number or a list and "solver" a name.
ExperimentConfig config_from_json(const nlohmann::json& doc, ExperimentConfig base = {});
nlohmann::json to_json(const ExperimentConfig& cfg);

struct RunRecord {
    int run_index = 0;
    Eigen::Index K = 0;
    Eigen::Index L = 0;
    double delta = 0.0;
    double pne = 0.0;
    double t0 = 0.0;
    double t1 = 0.0;
    double final_objective = 0.0;
    long iterations = 0;
    std::string termination;  // termination reason, or "error:<code>" when the run failed
    double wall_time_seconds = 0.0;

    bool failed() const { return termination.rfind("error:", 0) == 0; }
};

struct CellSummary {
    Eigen::Index K = 0;
    Eigen::Index L = 0;
    double delta = 0.0;
    int runs = 0;
    int failures = 0;
    double mean_pne = 0.0;    // over successful runs; NaN when all failed
    double median_pne = 0.0;
};

struct ExperimentResult {
    std::vector<RunRecord> records;  // cell-major, run index ascending
    std::vector<CellSummary> summary;
};

/// Instance seed for run `run_index`; identical across cells.
std::uint64_t run_seed(std::uint64_t master_seed, int run_index);

/// Solves one instance with the configured solver and scores it. Solver
/// errors become a failed record instead of propagating.
RunRecord run_single(const ExperimentConfig& cfg, const JitterInstance& instance, int run_index);

/// Runs every (K, L, delta, run) task, up to cfg.jobs concurrently. Output
/// order does not depend on completion order.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

std::vector<CellSummary> summarize(const std::vector<RunRecord>& records);

/// Median of a non-empty sample (mean of the middle pair for even sizes).
double median(std::vector<double> values);

inline constexpr std::string_view kCsvHeader =
    "run,K,L,delta,pne,t0,t1,objective,iters,termination,wall_s";

/// CSV with 17-significant-digit floats; wall_s is the last column.
std::string records_to_csv(const std::vector<RunRecord>& records);

/// Per-cell mean/median PNE and their 20 log10 values ("-inf" for zero).
nlohmann::json summary_to_json(const std::vector<CellSummary>& summary);

/// Writes results.csv and summary.json under cfg.output_dir.
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result);

struct Reconstruction {
    SampleLocations x_true;
    SampleLocations x_hat;
    SampleLocations x_corrected;  // t0 + t1 * x_hat
    double pne;
    double t0;
    double t1;
    ObservationMatrix Y_hat;  // V(x_hat) pinv(V(x_hat)) Y
    double relative_error;    // ||Y_hat - Y||_F / ||Y||_F
    Vector curve_grid;        // 200 points over the scenario domain
    Matrix true_curves;       // 200 x L, polynomials of W_true
    Matrix inferred_curves;   // 200 x L, fitted polynomials in corrected coordinates
};

inline constexpr Eigen::Index kCurvePoints = 200;

Reconstruction reconstruct(const JitterInstance& instance, const SampleLocations& x_hat);

nlohmann::json to_json(const Reconstruction& rec);

/// Reconstruction artifact for a solver report, as JSON.
nlohmann::json emit_reconstruction(const JitterInstance& instance, const SolverReport& report);

nlohmann::json to_json(const SolverReport& report);

}  // namespace blindpoly
