#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "driftwin/baselines.hpp"
#include "driftwin/instances.hpp"
#include "driftwin/reconstruction.hpp"

namespace driftwin {

enum class Solver { CoordinateDescent, NelderMead };

const char* to_string(Solver solver);
/// "cd" or "nelder-mead"; throws InvalidInput otherwise.
Solver solver_from_string(const std::string& name);

struct BenchmarkConfig {
    std::vector<double> ranks{1.0, 1.4, 1.9, 2.2, 2.6};
    std::size_t runs = 10;
    std::size_t categories = 5;
    std::uint64_t seed = 0;
    std::vector<Solver> solvers{Solver::CoordinateDescent, Solver::NelderMead};
    ReconstructionConfig reconstruction{};
    NelderMeadOptions nelder_mead{};
    InstanceOptions instances{};
};

/// One (rank, run, solver) cell. Errors are medians of elementwise absolute
/// differences to the ground truth.
struct BenchmarkRun {
    double rank = 0.0;
    std::size_t run = 0;
    Solver solver = Solver::CoordinateDescent;
    std::uint64_t instance_seed = 0;
    std::size_t windows = 0;
    std::size_t atoms = 0;
    double windows_per_atom = 0.0;
    double atoms_per_window = 0.0;
    double d_error = 0.0;
    double p_error = 0.0;
    double objective = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    bool trace_monotone = true;
};

struct SummaryRow {
    double rank = 0.0;
    Solver solver = Solver::CoordinateDescent;
    std::size_t runs = 0;
    double d_digits_mean = 0.0, d_digits_sd = 0.0;
    double p_digits_mean = 0.0, p_digits_sd = 0.0;
    double objective_digits_mean = 0.0, objective_digits_sd = 0.0;
};

double median_abs_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// -log10 of a non-negative error, with zero mapped to 300.
double correct_digits(double error);

/// Instance for a benchmark cell; the same (seed, rank index, run) always gives the same instance.
Instance benchmark_instance(const BenchmarkConfig& config, std::size_t rank_index, std::size_t run);

/// Runs every cell (in parallel, see worker_count) and returns them sorted by
/// rank, run and solver.
std::vector<BenchmarkRun> run_benchmark(const BenchmarkConfig& config);

std::vector<SummaryRow> summarize(const std::vector<BenchmarkRun>& runs);

void write_runs_csv(std::ostream& out, const std::vector<BenchmarkRun>& runs);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace driftwin
