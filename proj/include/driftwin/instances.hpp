#pragma once

#include <cstdint>
#include <vector>

#include "driftwin/wds_core.hpp"
#include "driftwin/window_algebra.hpp"

namespace driftwin {

/// Deterministic 64-bit seed for a cell of a seeded experiment grid.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

struct InstanceOptions {
    std::size_t categories = 5;
    std::size_t grid_min = 8;   // window endpoints are integers in [0, grid]
    std::size_t grid_max = 16;
    double rank_slack = 0.05;   // accepted relative deviation from the target rank
    std::size_t max_attempts = 10000;
    // Minimum identifiability_margin of an accepted instance; 0 accepts all.
    double min_identifiability = 0.0;
};

/// Second smallest over largest singular value of the map Q -> W Q - diag(W Q 1) R
/// on N x m matrices Q = diag(P) D. The noiseless problem has a unique solution
/// in Q up to scale only when this is positive.
double identifiability_margin(const IncidenceMatrix& incidence, const Eigen::MatrixXd& R);

/// A synthetic reconstruction problem: random interval windows, a random
/// ground-truth process over their atoms and the induced observations.
/// The generator targets windows per atom (n / N); both ratios are kept.
struct Instance {
    std::vector<IntervalWindow> windows;
    Atomization atomization;
    DistributionProcess truth;
    WindowObservations obs;
    double windows_per_atom = 0.0;  // n / N
    double atoms_per_window = 0.0;  // N / n
    double identifiability = 0.0;
};

Instance make_instance(double target_rank, std::uint64_t seed, const InstanceOptions& options = {});

/// Full singleton-plus-pairwise-union system over N unit-length atoms, with a
/// random process whose rows are pairwise distinct.
Instance make_singleton_union_instance(std::size_t atoms, std::uint64_t seed, std::size_t categories = 5);

/// Dirichlet(1, ..., 1) draw.
Eigen::VectorXd uniform_simplex(std::size_t dim, std::uint64_t seed);

}  // namespace driftwin
