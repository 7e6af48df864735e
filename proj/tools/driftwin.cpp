#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "driftwin/baselines.hpp"
#include "driftwin/benchmark.hpp"
#include "driftwin/error.hpp"
#include "driftwin/io.hpp"
#include "driftwin/parallel.hpp"
#include "driftwin/reconstruction.hpp"
#include "driftwin/water_case.hpp"
#include "driftwin/window_algebra.hpp"

namespace fs = std::filesystem;
using namespace driftwin;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitNumeric = 4;

int exit_code(ErrorCode code) {
    return code == ErrorCode::NonFiniteObjective ? kExitNumeric : kExitValidation;
}

Json read_json(const std::string& path) {
    try {
        return Json::parse(read_text_file(path));
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::InvalidInput, path + ": malformed JSON (" + e.what() + ")");
    }
}

Eigen::MatrixXd read_matrix(const std::string& path) {
    std::istringstream in(read_text_file(path));
    return read_matrix_csv(in);
}

void write_matrix(const fs::path& path, const Eigen::MatrixXd& M) {
    std::ostringstream out;
    write_matrix_csv(out, M);
    write_text_file(path, out.str());
}

std::string now_iso() {
    return format_iso8601(static_cast<std::int64_t>(std::time(nullptr)));
}

Json versions() {
    return {{"driftwin", DRIFTWIN_VERSION},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"compiler", __VERSION__}};
}

struct Manifest {
    std::string command;
    Json config;
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    std::string started = now_iso();

    void write(const fs::path& path) const {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        Json j{{"command", command},       {"config", config},   {"seed", seed},
               {"versions", versions()},   {"outputs", outputs}, {"started", started},
               {"wall_clock_seconds", secs}, {"threads", worker_count()}};
        write_text_file(path, j.dump(2) + "\n");
    }
};

std::vector<double> parse_ranks(const std::string& text) {
    std::vector<double> ranks;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            const double r = std::stod(cell, &used);
            if (used != cell.size() || !(r > 0.0)) throw std::invalid_argument(cell);
            ranks.push_back(r);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidInput, "bad rank '" + cell + "'");
        }
    }
    if (ranks.empty()) throw Error(ErrorCode::InvalidInput, "no ranks given");
    return ranks;
}

std::string rank_label(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", r);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reconstruct distribution processes from windowed observations"};
    app.require_subcommand(1);

    // atomize
    auto* atomize_cmd = app.add_subcommand("atomize", "Split windows into atoms; writes atoms.json and incidence.csv");
    std::string windows_path, atomize_out = ".";
    atomize_cmd->add_option("windows", windows_path, "Windows JSON")->required();
    atomize_cmd->add_option("-o,--out-dir", atomize_out, "Output directory");

    // reconstruct
    auto* rec_cmd = app.add_subcommand("reconstruct", "Fit (P, D) to an incidence matrix and window distributions");
    std::string inc_path, obs_path, result_path, solver_name = "cd", variant_name = "constrained";
    double tol = 0.0;
    std::size_t max_iter = 0;
    rec_cmd->add_option("--incidence", inc_path, "Incidence CSV (windows x atoms)")->required();
    rec_cmd->add_option("--observations", obs_path, "Window distributions CSV (windows x categories)")->required();
    rec_cmd->add_option("--solver", solver_name, "cd or nelder-mead")->check(CLI::IsMember({"cd", "nelder-mead"}));
    rec_cmd->add_option("--variant", variant_name, "constrained or direct")
        ->check(CLI::IsMember({"constrained", "direct"}));
    rec_cmd->add_option("--tol", tol, "Objective decrease threshold (cd) or vertex spread (nelder-mead)");
    rec_cmd->add_option("--max-iter", max_iter, "Iteration limit");
    rec_cmd->add_option("-o,--output", result_path, "Result JSON (stdout when omitted)");

    // benchmark
    auto* bench_cmd = app.add_subcommand("benchmark", "Synthetic recovery benchmark over ranks and solvers");
    std::string ranks_text = "1.0,1.4,1.9,2.2,2.6", solvers_text = "cd,nelder-mead", bench_out = "benchmark",
                fixtures_dir;
    std::size_t runs = 10, categories = 5;
    std::uint64_t seed = 0;
    double min_ident = 0.0;
    bench_cmd->add_option("--ranks", ranks_text, "Comma-separated target ranks (windows per atom)");
    bench_cmd->add_option("--runs", runs, "Instances per rank")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--m", categories, "Number of categories")->check(CLI::Range(2, 1000));
    bench_cmd->add_option("--seed", seed, "Base seed");
    bench_cmd->add_option("--solvers", solvers_text, "Comma-separated solvers");
    bench_cmd->add_option("--min-identifiability", min_ident, "Resample instances below this identifiability margin");
    bench_cmd->add_option("-o,--out-dir", bench_out, "Output directory");
    bench_cmd->add_option("--emit-fixtures", fixtures_dir, "Also write every instance under this directory");

    // water
    auto* water_cmd = app.add_subcommand("water", "Water-meter case study");
    water_cmd->require_subcommand(1);
    auto* sim_cmd = water_cmd->add_subcommand("simulate", "Simulate households and their meter readings");
    std::string profile_path, meters_path = "meters.csv", truth_path;
    std::size_t households = 200, days = 0;
    double reports = 4.0;
    std::uint64_t water_seed = 0;
    sim_cmd->add_option("--profile", profile_path, "Demand profile JSON (built-in two-peak profile when omitted)");
    sim_cmd->add_option("--households", households, "Number of households")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--days", days, "Horizon in days (overrides the profile)");
    sim_cmd->add_option("--reports-per-day", reports, "Mean meter readings per day")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", water_seed, "Seed");
    sim_cmd->add_option("-o,--output", meters_path, "Meter CSV");
    sim_cmd->add_option("--truth", truth_path, "Hourly ground-truth consumption CSV (households x hours)");

    auto* fit_cmd = water_cmd->add_subcommand("fit", "Fit hour-of-day demand from meter readings");
    std::string fit_in, estimate_path = "estimate.json";
    std::size_t bins = 24;
    fit_cmd->add_option("--meters", fit_in, "Meter CSV")->required();
    fit_cmd->add_option("--bins", bins, "Cells per day")->check(CLI::PositiveNumber);
    fit_cmd->add_option("-o,--output", estimate_path, "Estimate JSON");

    auto* pred_cmd = water_cmd->add_subcommand("predict", "Community mean and quantile curves");
    std::string pred_in, curves_path = "curves.csv";
    std::size_t community = 1000;
    double quantile = 0.95;
    pred_cmd->add_option("--estimate", pred_in, "Estimate JSON")->required();
    pred_cmd->add_option("--households", community, "Community size");
    pred_cmd->add_option("--quantile", quantile, "Quantile level in (0, 1)");
    pred_cmd->add_option("-o,--output", curves_path, "Curve CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (*atomize_cmd) {
            const WindowSpec spec = windows_from_json(read_json(windows_path));
            const Atomization at = atomize(spec.windows, spec.horizon);
            write_text_file(fs::path(atomize_out) / "atoms.json", to_json(at.atoms).dump(2) + "\n");
            write_matrix(fs::path(atomize_out) / "incidence.csv", at.incidence.entries);
            return kExitOk;
        }

        if (*rec_cmd) {
            IncidenceMatrix inc{read_matrix(inc_path)};
            WindowObservations obs{read_matrix(obs_path), inc};
            ReconstructionConfig cfg;
            cfg.objective_variant = variant_name == "direct" ? ObjectiveVariant::Direct : ObjectiveVariant::Constrained;
            if (max_iter) cfg.max_outer_iter = max_iter;
            NelderMeadOptions nm;
            if (tol > 0.0) {
                cfg.convergence_tol = tol;
                nm.f_tol = tol;
            }
            if (max_iter) nm.max_iter = max_iter;
            const ReconstructionResult res = solver_from_string(solver_name) == Solver::CoordinateDescent
                                                 ? reconstruct(inc, obs, cfg)
                                                 : nelder_mead_reconstruct(inc, obs, cfg, nm);
            const std::string text = to_json(res).dump(2) + "\n";
            if (result_path.empty()) std::cout << text;
            else write_text_file(result_path, text);
            if (!res.converged) {
                std::cerr << "driftwin: iteration limit reached before convergence\n";
                return kExitNonConvergence;
            }
            return kExitOk;
        }

        if (*bench_cmd) {
            Manifest manifest;
            manifest.command = "benchmark";
            manifest.seed = seed;
            BenchmarkConfig cfg;
            cfg.ranks = parse_ranks(ranks_text);
            cfg.runs = runs;
            cfg.categories = categories;
            cfg.seed = seed;
            cfg.instances.min_identifiability = min_ident;
            cfg.solvers.clear();
            std::stringstream ss(solvers_text);
            for (std::string s; std::getline(ss, s, ',');) cfg.solvers.push_back(solver_from_string(s));
            manifest.config = {{"ranks", cfg.ranks},
                               {"runs", runs},
                               {"m", categories},
                               {"solvers", solvers_text},
                               {"min_identifiability", min_ident},
                               {"absent_solvers", {"slsqp-eq3", "slsqp-eq2"}},
                               {"error_metric", "log10"}};

            const auto rows = run_benchmark(cfg);
            const fs::path out(bench_out);
            std::ostringstream table, raw;
            write_summary_csv(table, summarize(rows));
            write_runs_csv(raw, rows);
            write_text_file(out / "table.csv", table.str());
            write_text_file(out / "runs.csv", raw.str());
            manifest.outputs = {(out / "table.csv").string(), (out / "runs.csv").string()};

            if (!fixtures_dir.empty()) {
                for (std::size_t ri = 0; ri < cfg.ranks.size(); ++ri)
                    for (std::size_t run = 0; run < runs; ++run) {
                        const Instance inst = benchmark_instance(cfg, ri, run);
                        const fs::path dir =
                            fs::path(fixtures_dir) / ("rank" + rank_label(cfg.ranks[ri]) + "_run" + std::to_string(run));
                        write_matrix(dir / "incidence.csv", inst.atomization.incidence.entries);
                        write_matrix(dir / "observations.csv", inst.obs.R);
                        write_matrix(dir / "truth_P.csv", inst.truth.P);
                        write_matrix(dir / "truth_D.csv", inst.truth.D);
                        Json windows = Json::array();
                        for (const auto& w : inst.windows) {
                            Json ivs = Json::array();
                            for (const auto& iv : w.intervals) ivs.push_back({iv.lo, iv.hi});
                            windows.push_back({{"id", w.id}, {"intervals", ivs}});
                        }
                        const auto& h = inst.atomization.atoms.horizon;
                        write_text_file(dir / "windows.json",
                                        Json{{"windows", windows}, {"horizon", {h.lo, h.hi}}}.dump(2) + "\n");
                    }
                manifest.outputs.push_back(fixtures_dir);
            }
            manifest.write(out / "manifest.json");
            return kExitOk;
        }

        if (*sim_cmd) {
            Manifest manifest;
            manifest.command = "water simulate";
            manifest.seed = water_seed;
            DemandProfile profile = profile_path.empty() ? default_profile() : profile_from_json(read_json(profile_path));
            if (days) profile.horizon_days = days;
            const Simulation sim = simulate_households(profile, households, reports, water_seed);
            std::ostringstream meters;
            write_meter_csv(meters, sim.logs);
            write_text_file(meters_path, meters.str());
            manifest.outputs.push_back(meters_path);
            if (!truth_path.empty()) {
                write_matrix(truth_path, sim.consumption);
                manifest.outputs.push_back(truth_path);
            }
            manifest.config = {{"profile", to_json(profile)}, {"households", households}, {"reports_per_day", reports}};
            manifest.write(fs::path(meters_path).replace_extension(".manifest.json"));
            return kExitOk;
        }

        if (*fit_cmd) {
            std::istringstream in(read_text_file(fit_in));
            const DemandEstimate est = fit_demand(read_meter_csv(in), bins);
            write_text_file(estimate_path, to_json(est).dump(2) + "\n");
            return kExitOk;
        }

        if (*pred_cmd) {
            const DemandEstimate est = estimate_from_json(read_json(pred_in));
            const CommunityForecast f = predict_community(est, community, quantile);
            std::ostringstream out;
            out << "hour,mean,quantile\n";
            char buf[96];
            for (Eigen::Index h = 0; h < f.mean.size(); ++h) {
                const double hour = 24.0 * static_cast<double>(h) / static_cast<double>(f.mean.size());
                std::snprintf(buf, sizeof buf, "%g,%.17g,%.17g\n", hour, f.mean(h), f.quantile(h));
                out << buf;
            }
            write_text_file(curves_path, out.str());
            return kExitOk;
        }
    } catch (const Error& e) {
        std::cerr << "driftwin: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "driftwin: internal error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}
