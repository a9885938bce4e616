#include "blindpoly/experiment.hpp"

#include "blindpoly/ambiguity.hpp"
#include "blindpoly/error.hpp"
#include "blindpoly/fixture_io.hpp"
#include "blindpoly/seeding.hpp"
#include "blindpoly/vandermonde.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace blindpoly {

std::string_view to_string(SolverKind kind) {
    switch (kind) {
        case SolverKind::subspace_scp: return "subspace-scp";
        case SolverKind::selection_exhaustive: return "selection-exhaustive";
        case SolverKind::alternating_baseline: return "alternating-baseline";
    }
    return "unknown";
}

std::optional<SolverKind> parse_solver(std::string_view name) {
    if (name == "subspace-scp") return SolverKind::subspace_scp;
    if (name == "selection-exhaustive") return SolverKind::selection_exhaustive;
    if (name == "alternating-baseline") return SolverKind::alternating_baseline;
    return std::nullopt;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> ExperimentConfig::cells() const {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
    for (auto K : K_values) {
        for (auto L : L_values) {
            if (L >= K) out.emplace_back(K, L);
        }
    }
    return out;
}

void ExperimentConfig::validate() const {
    if (K_values.empty() || L_values.empty() || deltas.empty()) {
        throw InvalidInput("experiment needs at least one K, L and delta value");
    }
    if (cells().empty()) throw InvalidInput("no (K, L) combination satisfies L >= K");
    if (runs < 1) throw InvalidInput("experiment needs runs >= 1");
    if (jobs < 1) throw InvalidInput("experiment needs jobs >= 1");
    for (auto K : K_values) {
        if (K < 1) throw InvalidInput("K values must be >= 1");
    }
    for (const auto& [K, L] : cells()) {
        JitterScenario s{N, domain_lo, domain_hi, deltas.front(), K, L, 0};
        s.validate();
    }
    for (double d : deltas) {
        if (!(d > 0.0) || !std::isfinite(d)) throw InvalidInput("delta values must be > 0");
    }
    scp.validate();
    if (solver == SolverKind::selection_exhaustive && grid_size <= N) {
        throw InvalidInput("selection grid size must exceed N");
    }
}

namespace {

template <class T>
std::vector<T> scalar_or_list(const nlohmann::json& j) {
    if (j.is_array()) return j.get<std::vector<T>>();
    return {j.get<T>()};
}

RadiusRule parse_radius_rule(const std::string& name) {
    if (name == "adaptive") return RadiusRule::adaptive;
    if (name == "geometric") return RadiusRule::geometric;
    throw InvalidInput(fmt::format("unknown radius rule '{}'", name));
}

std::string_view to_string(RadiusRule rule) {
    return rule == RadiusRule::adaptive ? "adaptive" : "geometric";
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& doc, ExperimentConfig cfg) {
    if (!doc.is_object()) throw InvalidInput("experiment config must be a JSON object");
    try {
        if (doc.contains("K")) cfg.K_values = scalar_or_list<Eigen::Index>(doc["K"]);
        if (doc.contains("L")) cfg.L_values = scalar_or_list<Eigen::Index>(doc["L"]);
        if (doc.contains("delta")) cfg.deltas = scalar_or_list<double>(doc["delta"]);
        if (doc.contains("N")) cfg.N = doc["N"].get<Eigen::Index>();
        if (doc.contains("domain_lo")) cfg.domain_lo = doc["domain_lo"].get<double>();
        if (doc.contains("domain_hi")) cfg.domain_hi = doc["domain_hi"].get<double>();
        if (doc.contains("runs")) cfg.runs = doc["runs"].get<int>();
        if (doc.contains("solver")) {
            const auto name = doc["solver"].get<std::string>();
            auto kind = parse_solver(name);
            if (!kind) throw InvalidInput(fmt::format("unknown solver '{}'", name));
            cfg.solver = *kind;
        }
        if (doc.contains("grid_size")) cfg.grid_size = doc["grid_size"].get<Eigen::Index>();
        if (doc.contains("selection_budget")) cfg.selection_budget = doc["selection_budget"].get<double>();
        if (doc.contains("am_max_outer")) cfg.am_max_outer = doc["am_max_outer"].get<int>();
        if (doc.contains("am_tolerance")) cfg.am_tolerance = doc["am_tolerance"].get<double>();
        if (doc.contains("seed")) cfg.master_seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("jobs")) cfg.jobs = doc["jobs"].get<unsigned>();
        if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();
        if (doc.contains("scp")) {
            const auto& s = doc["scp"];
            ScpConfig& c = cfg.scp;
            if (s.contains("radius_rule")) c.radius_rule = parse_radius_rule(s["radius_rule"].get<std::string>());
            if (s.contains("initial_radius")) c.initial_radius = s["initial_radius"].get<double>();
            if (s.contains("decay")) c.decay = s["decay"].get<double>();
            if (s.contains("rho_floor")) c.rho_floor = s["rho_floor"].get<double>();
            if (s.contains("grow")) c.grow = s["grow"].get<double>();
            if (s.contains("shrink")) c.shrink = s["shrink"].get<double>();
            if (s.contains("max_radius")) c.max_radius = s["max_radius"].get<double>();
            if (s.contains("max_iterations")) c.max_iterations = s["max_iterations"].get<int>();
            if (s.contains("objective_tolerance")) c.objective_tolerance = s["objective_tolerance"].get<double>();
            if (s.contains("step_tolerance")) c.step_tolerance = s["step_tolerance"].get<double>();
            if (s.contains("line_search_points")) c.line_search_points = s["line_search_points"].get<int>();
            if (s.contains("polish")) c.polish = s["polish"].get<bool>();
            if (s.contains("num_restarts")) c.num_restarts = s["num_restarts"].get<int>();
            if (s.contains("restart_scale")) c.restart_scale = s["restart_scale"].get<double>();
            if (s.contains("restart_seed")) c.restart_seed = s["restart_seed"].get<std::uint64_t>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(fmt::format("malformed experiment config: {}", e.what()));
    }
    return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
    const ScpConfig& c = cfg.scp;
    return {
        {"K", cfg.K_values},
        {"L", cfg.L_values},
        {"delta", cfg.deltas},
        {"N", cfg.N},
        {"domain_lo", cfg.domain_lo},
        {"domain_hi", cfg.domain_hi},
        {"runs", cfg.runs},
        {"solver", std::string(to_string(cfg.solver))},
        {"grid_size", cfg.grid_size},
        {"selection_budget", cfg.selection_budget},
        {"am_max_outer", cfg.am_max_outer},
        {"am_tolerance", cfg.am_tolerance},
        {"seed", cfg.master_seed},
        {"scp",
         {{"radius_rule", std::string(to_string(c.radius_rule))},
          {"initial_radius", c.initial_radius},
          {"decay", c.decay},
          {"rho_floor", c.rho_floor},
          {"grow", c.grow},
          {"shrink", c.shrink},
          {"max_radius", c.max_radius},
          {"max_iterations", c.max_iterations},
          {"objective_tolerance", c.objective_tolerance},
          {"step_tolerance", c.step_tolerance},
          {"line_search_points", c.line_search_points},
          {"polish", c.polish},
          {"num_restarts", c.num_restarts},
          {"restart_scale", c.restart_scale},
          {"restart_seed", c.restart_seed}}},
    };
}

std::uint64_t run_seed(std::uint64_t master_seed, int run_index) {
    return derive_seed(master_seed, static_cast<std::uint64_t>(run_index));
}

RunRecord run_single(const ExperimentConfig& cfg, const JitterInstance& instance, int run_index) {
    const JitterScenario& s = instance.scenario;
    RunRecord rec;
    rec.run_index = run_index;
    rec.K = s.K;
    rec.L = s.L;
    rec.delta = s.delta;

    const auto start = std::chrono::steady_clock::now();
    try {
        SampleLocations x_hat = instance.uniform_locations;
        ScpConfig scp = cfg.scp;
        scp.period = s.period();
        switch (cfg.solver) {
            case SolverKind::subspace_scp: {
                SolverReport r = solve_subspace(instance.Y, instance.uniform_locations, s.K, scp);
                x_hat = r.x_hat;
                rec.final_objective = r.final_objective();
                rec.iterations = r.iterations;
                rec.termination = std::string(to_string(r.termination));
                break;
            }
            case SolverKind::alternating_baseline: {
                SolverReport r = alternating_minimization(instance.Y, instance.uniform_locations,
                                                          s.K, cfg.am_max_outer, cfg.am_tolerance, scp);
                x_hat = r.x_hat;
                rec.final_objective = r.final_objective();
                rec.iterations = r.iterations;
                rec.termination = std::string(to_string(r.termination));
                break;
            }
            case SolverKind::selection_exhaustive: {
                SelectionConfig sel;
                sel.budget = cfg.selection_budget;
                const auto grid = CandidateGrid::uniform(s.domain_lo, s.domain_hi, cfg.grid_size);
                SelectionResult r = exhaustive_search(grid, instance.Y, s.K, sel);
                x_hat = r.x_hat;
                rec.final_objective = r.residual;
                rec.iterations = static_cast<long>(r.patterns_evaluated);
                rec.termination = "exhaustive";
                break;
            }
        }
        const PneResult score = pne(x_hat, instance.true_locations, s.period());
        rec.pne = score.value;
        rec.t0 = score.t0;
        rec.t1 = score.t1;
    } catch (const Error& e) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        rec.pne = rec.t0 = rec.t1 = nan;
        if (rec.termination.empty()) rec.final_objective = nan;
        rec.termination = std::string("error:") + e.code();
    }
    rec.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();

    struct Task {
        Eigen::Index K, L;
        double delta;
        int run;
    };
    std::vector<Task> tasks;
    for (const auto& [K, L] : cfg.cells()) {
        for (double delta : cfg.deltas) {
            for (int run = 0; run < cfg.runs; ++run) tasks.push_back({K, L, delta, run});
        }
    }

    std::vector<RunRecord> records(tasks.size());
    auto execute = [&](std::size_t i) {
        const Task& t = tasks[i];
        JitterScenario s{cfg.N, cfg.domain_lo, cfg.domain_hi, t.delta, t.K, t.L,
                         run_seed(cfg.master_seed, t.run)};
        records[i] = run_single(cfg, generate(s), t.run);
    };

    const unsigned jobs = std::min<unsigned>(cfg.jobs, static_cast<unsigned>(tasks.size()));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) execute(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(jobs);
        {
            std::vector<std::jthread> workers;
            for (unsigned w = 0; w < jobs; ++w) {
                workers.emplace_back([&, w] {
                    try {
                        for (std::size_t i = next++; i < tasks.size(); i = next++) execute(i);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
        }
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    ExperimentResult result;
    result.summary = summarize(records);
    result.records = std::move(records);
    return result;
}

double median(std::vector<double> values) {
    if (values.empty()) throw InvalidInput("median of an empty sample");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

std::vector<CellSummary> summarize(const std::vector<RunRecord>& records) {
    std::vector<CellSummary> out;
    std::vector<std::vector<double>> samples;
    for (const RunRecord& r : records) {
        auto it = std::find_if(out.begin(), out.end(), [&](const CellSummary& c) {
            return c.K == r.K && c.L == r.L && c.delta == r.delta;
        });
        if (it == out.end()) {
            out.push_back({r.K, r.L, r.delta, 0, 0, 0.0, 0.0});
            samples.emplace_back();
            it = out.end() - 1;
        }
        auto& sample = samples[static_cast<std::size_t>(it - out.begin())];
        ++it->runs;
        if (r.failed()) {
            ++it->failures;
        } else {
            sample.push_back(r.pne);
        }
    }
    for (std::size_t c = 0; c < out.size(); ++c) {
        const auto& sample = samples[c];
        if (sample.empty()) {
            out[c].mean_pne = out[c].median_pne = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        out[c].mean_pne = std::accumulate(sample.begin(), sample.end(), 0.0) /
                          static_cast<double>(sample.size());
        out[c].median_pne = median(sample);
    }
    return out;
}

namespace {

std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", v);
}

nlohmann::json db_value(double v) {
    if (std::isnan(v)) return nullptr;
    const double db = to_db(v);
    if (std::isinf(db)) return "-inf";
    return db;
}

}  // namespace

std::string records_to_csv(const std::vector<RunRecord>& records) {
    std::string out(kCsvHeader);
    out += '\n';
    for (const RunRecord& r : records) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{:.6f}\n", r.run_index, r.K, r.L,
                           csv_number(r.delta), csv_number(r.pne), csv_number(r.t0),
                           csv_number(r.t1), csv_number(r.final_objective), r.iterations,
                           r.termination, r.wall_time_seconds);
    }
    return out;
}

nlohmann::json summary_to_json(const std::vector<CellSummary>& summary) {
    auto cells = nlohmann::json::array();
    for (const CellSummary& c : summary) {
        cells.push_back({
            {"K", c.K},
            {"L", c.L},
            {"delta", c.delta},
            {"runs", c.runs},
            {"failures", c.failures},
            {"mean_pne", std::isnan(c.mean_pne) ? nlohmann::json(nullptr) : nlohmann::json(c.mean_pne)},
            {"median_pne", std::isnan(c.median_pne) ? nlohmann::json(nullptr) : nlohmann::json(c.median_pne)},
            {"mean_pne_db", db_value(c.mean_pne)},
            {"median_pne_db", db_value(c.median_pne)},
        });
    }
    return {{"db_convention", "20*log10"}, {"cells", cells}};
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
    write_text(cfg.output_dir / "results.csv", records_to_csv(result.records));
    nlohmann::json summary = summary_to_json(result.summary);
    summary["config"] = to_json(cfg);
    write_text(cfg.output_dir / "summary.json", dump_json(summary));
}

Reconstruction reconstruct(const JitterInstance& instance, const SampleLocations& x_hat) {
    const JitterScenario& s = instance.scenario;
    if (x_hat.size() != instance.true_locations.size()) {
        throw InvalidInput("estimate length differs from the instance");
    }
    const PneResult score = pne(x_hat, instance.true_locations, s.period());

    const Matrix V_hat = build_vandermonde(x_hat, s.K);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(V_hat);
    const CoefficientMatrix W_hat = cod.solve(instance.Y);
    ObservationMatrix Y_hat = V_hat * W_hat;
    const double y_norm = instance.Y.norm();
    const double rel = y_norm > 0.0 ? (Y_hat - instance.Y).norm() / y_norm : (Y_hat - instance.Y).norm();

    Vector grid(kCurvePoints);
    for (Eigen::Index i = 0; i < kCurvePoints; ++i) {
        grid[i] = s.domain_lo + (s.domain_hi - s.domain_lo) * static_cast<double>(i) /
                                    static_cast<double>(kCurvePoints - 1);
    }
    const SampleLocations grid_locs(grid);
    Matrix true_curves = build_vandermonde(grid_locs, s.K) * instance.W_true;
    // The fitted polynomials live in x_hat coordinates; map the plotting grid
    // back through the inverse of the correction t0 + t1 x_hat.
    Matrix inferred_curves = true_curves;
    if (score.t1 != 0.0) {
        const SampleLocations back((grid.array() - score.t0) / score.t1);
        inferred_curves = build_vandermonde(back, s.K) * W_hat;
    } else {
        inferred_curves.setConstant(std::numeric_limits<double>::quiet_NaN());
    }

    SampleLocations corrected((score.t0 + score.t1 * x_hat.values().array()).matrix());
    return Reconstruction{instance.true_locations, x_hat, std::move(corrected), score.value,
                          score.t0, score.t1, std::move(Y_hat), rel, std::move(grid),
                          std::move(true_curves), std::move(inferred_curves)};
}

nlohmann::json to_json(const Reconstruction& rec) {
    return {
        {"x_true", vector_to_json(rec.x_true.values())},
        {"x_hat", vector_to_json(rec.x_hat.values())},
        {"x_corrected", vector_to_json(rec.x_corrected.values())},
        {"pne", rec.pne},
        {"t0", rec.t0},
        {"t1", rec.t1},
        {"Y_hat", matrix_to_json(rec.Y_hat)},
        {"relative_error", rec.relative_error},
        {"curve_grid", vector_to_json(rec.curve_grid)},
        {"true_curves", matrix_to_json(rec.true_curves)},
        {"inferred_curves", matrix_to_json(rec.inferred_curves)},
    };
}

nlohmann::json emit_reconstruction(const JitterInstance& instance, const SolverReport& report) {
    return to_json(reconstruct(instance, report.x_hat));
}

nlohmann::json to_json(const SolverReport& report) {
    return {
        {"x_hat", vector_to_json(report.x_hat.values())},
        {"W_hat", matrix_to_json(report.W_hat)},
        {"objective_trace", report.objective_trace},
        {"polish_trace", report.polish_trace},
        {"objective_tolerance", report.objective_tolerance},
        {"final_objective", report.final_objective()},
        {"iterations", report.iterations},
        {"termination", std::string(to_string(report.termination))},
        {"restart_index", report.restart_index},
    };
}

}  // namespace blindpoly
