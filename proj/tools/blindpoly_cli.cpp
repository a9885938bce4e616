// blindpoly: command-line front end for blind polynomial regression.
//
//   blindpoly generate --delta 5 --seed 7 --out fixture.json
//   blindpoly solve    --fixture fixture.json --out result.json
//   blindpoly score    --estimate result.json --truth fixture.json
//   blindpoly sweep    --config sweep.json --runs 100 --delta 5 30 --out results/

#include "blindpoly/ambiguity.hpp"
#include "blindpoly/error.hpp"
#include "blindpoly/experiment.hpp"
#include "blindpoly/fixture_io.hpp"
#include "blindpoly/kernels.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace bp = blindpoly;

namespace {

constexpr std::uint64_t kDefaultSeed = 1;

std::uint64_t env_seed_or(std::uint64_t fallback) {
    if (const char* env = std::getenv("BLINDPOLY_SEED")) {
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(env, &used, 0);
            if (used == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw bp::InvalidInput(fmt::format("BLINDPOLY_SEED is not an unsigned integer: '{}'", env));
    }
    return fallback;
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
    } else {
        bp::write_text(out_path, text);
    }
}

// SCP knobs shared by `solve` and `sweep`.
struct ScpFlags {
    std::string radius_rule;
    int restarts = -1;
    double restart_scale = -1.0;
    int max_iterations = -1;
    int line_search_points = -1;
    bool no_polish = false;

    void add_to(CLI::App* app) {
        app->add_option("--radius-rule", radius_rule, "Trust radius rule: adaptive | geometric")
            ->check(CLI::IsMember({"adaptive", "geometric"}));
        app->add_option("--restarts", restarts, "Extra perturbed starting points");
        app->add_option("--restart-scale", restart_scale, "Restart half-width in sampling periods");
        app->add_option("--max-iterations", max_iterations, "SCP iteration limit");
        app->add_option("--line-search-points", line_search_points, "Interior line-search points");
        app->add_flag("--no-polish", no_polish, "Skip the rescaled polish stage");
    }

    void apply(bp::ScpConfig& cfg) const {
        if (!radius_rule.empty()) {
            cfg.radius_rule = radius_rule == "geometric" ? bp::RadiusRule::geometric
                                                         : bp::RadiusRule::adaptive;
        }
        if (restarts >= 0) cfg.num_restarts = restarts;
        if (restart_scale >= 0.0) cfg.restart_scale = restart_scale;
        if (max_iterations >= 0) cfg.max_iterations = max_iterations;
        if (line_search_points >= 0) cfg.line_search_points = line_search_points;
        if (no_polish) cfg.polish = false;
    }
};

// Locations from a JSON array, a JSON object (first matching key), or
// whitespace/comma separated text.
bp::Vector load_locations(const std::string& path, std::initializer_list<const char*> keys,
                          double* period_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw bp::InvalidInput(fmt::format("cannot open '{}'", path));
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    const auto doc = nlohmann::json::parse(text, nullptr, false);
    if (!doc.is_discarded()) {
        if (doc.is_array()) return bp::vector_from_json(doc);
        if (doc.is_object()) {
            if (period_out && doc.contains("period") && doc["period"].is_number()) {
                *period_out = doc["period"].get<double>();
            }
            for (const char* key : keys) {
                if (doc.contains(key)) return bp::vector_from_json(doc[key]);
                if (doc.contains("report") && doc["report"].contains(key)) {
                    return bp::vector_from_json(doc["report"][key]);
                }
            }
            throw bp::InvalidInput(fmt::format("'{}' has no location array", path));
        }
    }

    std::string cleaned = text;
    for (char& c : cleaned) {
        if (c == ',') c = ' ';
    }
    std::istringstream ss(cleaned);
    std::vector<double> values;
    for (std::string tok; ss >> tok;) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw bp::InvalidInput(fmt::format("'{}': cannot parse '{}' as a number", path, tok));
        }
    }
    return Eigen::Map<bp::Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

int cmd_generate(const bp::JitterScenario& scenario, bool seed_given, const std::string& out) {
    bp::JitterScenario s = scenario;
    if (!seed_given) s.seed = env_seed_or(kDefaultSeed);
    emit(out, bp::dump_json(bp::to_json(bp::generate(s))));
    return 0;
}

struct SolveArgs {
    std::string fixture;
    std::string solver = "subspace-scp";
    Eigen::Index grid_size = 60;
    double budget = 1e7;
    int am_max_outer = 5000;
    double am_tolerance = 1e-16;
    std::string out;
    ScpFlags scp;
};

int cmd_solve(const SolveArgs& args) {
    const bp::JitterInstance inst = bp::read_fixture(args.fixture);
    const auto kind = bp::parse_solver(args.solver);
    const bp::JitterScenario& s = inst.scenario;

    bp::ScpConfig cfg;
    cfg.period = s.period();
    args.scp.apply(cfg);

    nlohmann::json doc;
    doc["solver"] = args.solver;
    bp::SampleLocations x_hat = inst.uniform_locations;
    switch (*kind) {
        case bp::SolverKind::subspace_scp: {
            const bp::SolverReport r = bp::solve_subspace(inst.Y, inst.uniform_locations, s.K, cfg);
            doc["report"] = bp::to_json(r);
            x_hat = r.x_hat;
            break;
        }
        case bp::SolverKind::alternating_baseline: {
            const bp::SolverReport r = bp::alternating_minimization(
                inst.Y, inst.uniform_locations, s.K, args.am_max_outer, args.am_tolerance, cfg);
            doc["report"] = bp::to_json(r);
            x_hat = r.x_hat;
            break;
        }
        case bp::SolverKind::selection_exhaustive: {
            bp::SelectionConfig sel;
            sel.budget = args.budget;
            const auto grid = bp::CandidateGrid::uniform(s.domain_lo, s.domain_hi, args.grid_size);
            const bp::SelectionResult r = bp::exhaustive_search(grid, inst.Y, s.K, sel);
            doc["report"] = {{"x_hat", bp::vector_to_json(r.x_hat.values())},
                             {"W_hat", bp::matrix_to_json(r.W_hat)},
                             {"pattern", r.pattern.indices()},
                             {"residual", r.residual},
                             {"patterns_evaluated", r.patterns_evaluated}};
            x_hat = r.x_hat;
            break;
        }
    }
    doc["reconstruction"] = bp::to_json(bp::reconstruct(inst, x_hat));
    emit(args.out, bp::dump_json(doc));
    return 0;
}

int cmd_score(const std::string& estimate, const std::string& truth, double period,
              const std::string& out) {
    double fixture_period = 0.0;
    const bp::Vector x = load_locations(truth, {"x", "x_true", "true_locations"}, &fixture_period);
    const bp::Vector x_hat = load_locations(estimate, {"x_hat"}, nullptr);
    if (period <= 0.0) period = fixture_period;
    if (period <= 0.0) {
        throw bp::InvalidInput("no sampling period: pass --period or a fixture as --truth");
    }
    const bp::PneResult r = bp::pne(bp::SampleLocations(x_hat), bp::SampleLocations(x), period);
    const double db = bp::to_db(r.value);
    nlohmann::json doc = {{"pne", r.value}, {"t0", r.t0}, {"t1", r.t1}, {"period", period}};
    doc["pne_db"] = std::isinf(db) ? nlohmann::json("-inf") : nlohmann::json(db);
    emit(out, bp::dump_json(doc));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blind polynomial regression: recover sample locations and coefficients from Y = V(x) W"};
    app.require_subcommand(1);
    std::string kernel_backend;
    app.add_option("--kernels", kernel_backend, "Force a kernel backend: scalar | avx2")
        ->check(CLI::IsMember({"scalar", "avx2"}));

    // generate
    auto* gen = app.add_subcommand("generate", "Emit a jitter instance as a JSON fixture");
    bp::JitterScenario scenario;
    std::string gen_out;
    gen->add_option("--N", scenario.N, "Number of samples")->capture_default_str();
    gen->add_option("--K", scenario.K, "Polynomial degree + 1")->capture_default_str();
    gen->add_option("--L", scenario.L, "Number of polynomials (>= K)")->capture_default_str();
    gen->add_option("--delta", scenario.delta, "Jitter severity")->capture_default_str();
    gen->add_option("--domain-lo", scenario.domain_lo)->capture_default_str();
    gen->add_option("--domain-hi", scenario.domain_hi)->capture_default_str();
    auto* gen_seed = gen->add_option("--seed", scenario.seed, "Instance seed (else $BLINDPOLY_SEED)");
    gen->add_option("--out", gen_out, "Output path (default stdout)");

    // solve
    auto* solve = app.add_subcommand("solve", "Solve one fixture and emit report + reconstruction");
    SolveArgs solve_args;
    solve->add_option("--fixture", solve_args.fixture, "Fixture JSON")->required();
    solve->add_option("--solver", solve_args.solver)
        ->check(CLI::IsMember({"subspace-scp", "selection-exhaustive", "alternating-baseline"}))
        ->capture_default_str();
    solve->add_option("--grid-size", solve_args.grid_size, "Selection grid size G")->capture_default_str();
    solve->add_option("--budget", solve_args.budget, "Selection pattern budget")->capture_default_str();
    solve->add_option("--max-outer", solve_args.am_max_outer, "Alternating baseline iterations");
    solve->add_option("--out", solve_args.out, "Output path (default stdout)");
    solve_args.scp.add_to(solve);

    // score
    auto* score = app.add_subcommand("score", "PNE of an estimate against true locations");
    std::string score_est, score_truth, score_out;
    double score_period = 0.0;
    score->add_option("--estimate", score_est, "JSON (x_hat) or text file")->required();
    score->add_option("--truth", score_truth, "Fixture JSON, JSON array or text file")->required();
    score->add_option("--period", score_period, "Sampling period T (default: from fixture)");
    score->add_option("--out", score_out, "Output path (default stdout)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Monte-Carlo jitter experiment");
    std::string config_path;
    std::vector<Eigen::Index> sw_K, sw_L;
    std::vector<double> sw_delta;
    Eigen::Index sw_N = 0, sw_grid = 0;
    int sw_runs = 0;
    unsigned sw_jobs = 0;
    std::string sw_solver, sw_out;
    std::uint64_t sw_seed = 0;
    ScpFlags sw_scp;
    sweep->add_option("--config", config_path, "JSON experiment config");
    sweep->add_option("--K", sw_K, "Values of K");
    sweep->add_option("--L", sw_L, "Values of L");
    sweep->add_option("--delta", sw_delta, "Values of delta");
    sweep->add_option("--N", sw_N, "Number of samples");
    sweep->add_option("--runs", sw_runs, "Runs per cell");
    sweep->add_option("--solver", sw_solver)
        ->check(CLI::IsMember({"subspace-scp", "selection-exhaustive", "alternating-baseline"}));
    auto* sw_seed_opt = sweep->add_option("--seed", sw_seed, "Master seed");
    sweep->add_option("--out", sw_out, "Output directory");
    sweep->add_option("--jobs", sw_jobs, "Concurrent runs");
    sweep->add_option("--grid-size", sw_grid, "Selection grid size G");
    sw_scp.add_to(sweep);

    CLI11_PARSE(app, argc, argv);

    try {
        if (!kernel_backend.empty()) {
            const auto b = *bp::kernels::parse_backend(kernel_backend);
            if (!bp::kernels::set_active_backend(b)) {
                throw bp::InvalidInput(fmt::format("kernel backend '{}' is not supported here",
                                                   kernel_backend));
            }
        }

        if (*gen) return cmd_generate(scenario, gen_seed->count() > 0, gen_out);
        if (*solve) return cmd_solve(solve_args);
        if (*score) return cmd_score(score_est, score_truth, score_period, score_out);
        if (*sweep) {
            bp::ExperimentConfig cfg;
            bool seed_set = false;
            if (!config_path.empty()) {
                const auto doc = bp::read_json(config_path);
                cfg = bp::config_from_json(doc, cfg);
                seed_set = doc.contains("seed");
            }
            if (!sw_K.empty()) cfg.K_values = sw_K;
            if (!sw_L.empty()) cfg.L_values = sw_L;
            if (!sw_delta.empty()) cfg.deltas = sw_delta;
            if (sw_N > 0) cfg.N = sw_N;
            if (sw_runs > 0) cfg.runs = sw_runs;
            if (sw_jobs > 0) cfg.jobs = sw_jobs;
            if (sw_grid > 0) cfg.grid_size = sw_grid;
            if (!sw_solver.empty()) cfg.solver = *bp::parse_solver(sw_solver);
            if (!sw_out.empty()) cfg.output_dir = sw_out;
            if (sw_seed_opt->count() > 0) {
                cfg.master_seed = sw_seed;
            } else if (!seed_set) {
                cfg.master_seed = env_seed_or(kDefaultSeed);
            }
            sw_scp.apply(cfg.scp);

            const bp::ExperimentResult result = bp::run_experiment(cfg);
            bp::write_outputs(cfg, result);
            for (const auto& c : result.summary) {
                fmt::print("K={} L={} delta={:g}: median PNE {:.3e} ({:.1f} dB), mean {:.3e}, "
                           "{} failed of {}\n",
                           c.K, c.L, c.delta, c.median_pne, bp::to_db(c.median_pne), c.mean_pne,
                           c.failures, c.runs);
            }
            fmt::print("wrote {}\n", (cfg.output_dir / "results.csv").string());
            return 0;
        }
    } catch (const bp::Error& e) {
        fmt::print(stderr, "error ({}): {}\n", e.code(), e.what());
        return 1;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
