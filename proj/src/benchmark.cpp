#include "driftwin/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "driftwin/error.hpp"
#include "driftwin/parallel.hpp"

namespace driftwin {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_rank(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::pair<double, double> mean_sd(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return {mean, sd};
}

}  // namespace

const char* to_string(Solver solver) {
    return solver == Solver::CoordinateDescent ? "cd" : "nelder-mead";
}

Solver solver_from_string(const std::string& name) {
    if (name == "cd") return Solver::CoordinateDescent;
    if (name == "nelder-mead") return Solver::NelderMead;
    throw Error(ErrorCode::InvalidInput, "unknown solver '" + name + "' (expected cd or nelder-mead)");
}

double median_abs_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.size() == 0)
        throw Error(ErrorCode::DimensionMismatch, "median_abs_error needs equal, nonempty shapes");
    const Eigen::MatrixXd d = (a - b).cwiseAbs();
    std::vector<double> v(d.data(), d.data() + d.size());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    if (v.size() % 2 == 1) return v[mid];
    const double upper = v[mid];
    return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

double correct_digits(double error) {
    return error > 1e-300 ? -std::log10(error) : 300.0;
}

Instance benchmark_instance(const BenchmarkConfig& config, std::size_t rank_index, std::size_t run) {
    InstanceOptions opts = config.instances;
    opts.categories = config.categories;
    return make_instance(config.ranks.at(rank_index), derive_seed(config.seed, rank_index, run), opts);
}

std::vector<BenchmarkRun> run_benchmark(const BenchmarkConfig& config) {
    if (config.runs < 1) throw Error(ErrorCode::InvalidInput, "runs must be at least 1");
    if (config.ranks.empty() || config.solvers.empty()) throw Error(ErrorCode::InvalidInput, "nothing to run");
    const std::size_t cells = config.ranks.size() * config.runs;
    std::vector<std::vector<BenchmarkRun>> out(cells);

    parallel_for(cells, [&](std::size_t cell) {
        const std::size_t ri = cell / config.runs, run = cell % config.runs;
        const Instance inst = benchmark_instance(config, ri, run);
        const auto& inc = inst.atomization.incidence;
        for (Solver solver : config.solvers) {
            const ReconstructionResult res = solver == Solver::CoordinateDescent
                                                 ? reconstruct(inc, inst.obs, config.reconstruction)
                                                 : nelder_mead_reconstruct(inc, inst.obs, config.reconstruction,
                                                                           config.nelder_mead);
            BenchmarkRun r;
            r.rank = config.ranks[ri];
            r.run = run;
            r.solver = solver;
            r.instance_seed = derive_seed(config.seed, ri, run);
            r.windows = static_cast<std::size_t>(inc.windows());
            r.atoms = static_cast<std::size_t>(inc.atoms());
            r.windows_per_atom = inst.windows_per_atom;
            r.atoms_per_window = inst.atoms_per_window;
            r.d_error = median_abs_error(res.process.D, inst.truth.D);
            r.p_error = median_abs_error(res.process.P, inst.truth.P);
            r.objective = res.objective;
            r.iterations = res.iterations;
            r.converged = res.converged;
            for (std::size_t k = 1; k < res.objective_trace.size(); ++k)
                if (res.objective_trace[k] > res.objective_trace[k - 1] + 1e-12) r.trace_monotone = false;
            out[cell].push_back(r);
        }
    });

    std::vector<BenchmarkRun> runs;
    for (auto& v : out) runs.insert(runs.end(), v.begin(), v.end());
    std::stable_sort(runs.begin(), runs.end(), [](const BenchmarkRun& a, const BenchmarkRun& b) {
        if (a.rank != b.rank) return a.rank < b.rank;
        if (a.run != b.run) return a.run < b.run;
        return static_cast<int>(a.solver) < static_cast<int>(b.solver);
    });
    return runs;
}

std::vector<SummaryRow> summarize(const std::vector<BenchmarkRun>& runs) {
    std::map<std::pair<double, int>, std::vector<const BenchmarkRun*>> groups;
    for (const auto& r : runs) groups[{r.rank, static_cast<int>(r.solver)}].push_back(&r);
    std::vector<SummaryRow> rows;
    for (const auto& [key, members] : groups) {
        std::vector<double> d, p, f;
        for (const auto* r : members) {
            d.push_back(correct_digits(r->d_error));
            p.push_back(correct_digits(r->p_error));
            f.push_back(correct_digits(r->objective));
        }
        SummaryRow row;
        row.rank = key.first;
        row.solver = static_cast<Solver>(key.second);
        row.runs = members.size();
        std::tie(row.d_digits_mean, row.d_digits_sd) = mean_sd(d);
        std::tie(row.p_digits_mean, row.p_digits_sd) = mean_sd(p);
        std::tie(row.objective_digits_mean, row.objective_digits_sd) = mean_sd(f);
        rows.push_back(row);
    }
    return rows;
}

void write_runs_csv(std::ostream& out, const std::vector<BenchmarkRun>& runs) {
    out << "rank,run,solver,instance_seed,windows,atoms,windows_per_atom,atoms_per_window,"
           "d_median_error,p_median_error,objective,iterations,converged\n";
    for (const auto& r : runs)
        out << fmt_rank(r.rank) << ',' << r.run << ',' << to_string(r.solver) << ',' << r.instance_seed << ','
            << r.windows << ',' << r.atoms << ',' << fmt(r.windows_per_atom) << ',' << fmt(r.atoms_per_window) << ','
            << fmt(r.d_error) << ',' << fmt(r.p_error) << ',' << fmt(r.objective) << ',' << r.iterations << ','
            << (r.converged ? 1 : 0) << '\n';
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "rank,solver,runs,d_digits_mean,d_digits_sd,p_digits_mean,p_digits_sd,objective_digits_mean,"
           "objective_digits_sd\n";
    for (const auto& r : rows)
        out << fmt_rank(r.rank) << ',' << to_string(r.solver) << ',' << r.runs << ',' << fmt(r.d_digits_mean) << ','
            << fmt(r.d_digits_sd) << ',' << fmt(r.p_digits_mean) << ',' << fmt(r.p_digits_sd) << ','
            << fmt(r.objective_digits_mean) << ',' << fmt(r.objective_digits_sd) << '\n';
}

}  // namespace driftwin
