#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "driftwin/nnls.hpp"
#include "driftwin/wds_core.hpp"

namespace driftwin {

enum class ObjectiveVariant {
    Constrained,  // ||W diag(P) D - diag(WP) R||_F^2
    Direct,       // ||diag(WP)^-1 W diag(P) D - R||_F^2
};

enum class DistributionStep {
    Coupled,    // exact minimization over row-stochastic D
    Columnwise, // one NNLS per category column, rows normalized afterwards
};

struct ReconstructionConfig {
    std::size_t max_outer_iter = 20000;
    // Stop when, over stall_window consecutive iterations, the best objective
    // fell by less than convergence_tol or by less than relative_tol of itself.
    double convergence_tol = 1e-24;
    double relative_tol = 1e-6;
    std::size_t stall_window = 30;
    std::size_t acceleration_memory = 32;  // Anderson history on P, capped at N; 0 gives the plain alternation
    DistributionStep distribution_step = DistributionStep::Coupled;
    NnlsOptions nnls{0, 1e-14};  // inner solves; tighter than the standalone default
    ObjectiveVariant objective_variant = ObjectiveVariant::Constrained;
    std::uint64_t seed = 0;  // only read by the randomized baselines
};

struct ReconstructionResult {
    DistributionProcess process;
    double objective = 0.0;              // constrained objective of the returned process
    std::vector<double> objective_trace;  // best value so far after each outer iteration, in the optimized variant
    bool converged = false;
    std::size_t iterations = 0;
};

double objective(const IncidenceMatrix& incidence, const WindowObservations& obs, const DistributionProcess& process);
double direct_objective(const IncidenceMatrix& incidence, const WindowObservations& obs,
                        const DistributionProcess& process);
double objective(const IncidenceMatrix& incidence, const WindowObservations& obs, const DistributionProcess& process,
                 ObjectiveVariant variant);

/// Distribution step for fixed time weights: one NNLS per category column,
/// then rows scaled to sum one. Rows without inferred mass get the P-weighted
/// mean distribution of the others.
Eigen::MatrixXd solve_distributions(const IncidenceMatrix& incidence, const Eigen::MatrixXd& R,
                                    const Eigen::VectorXd& P, ObjectiveVariant variant, const NnlsOptions& nnls_options);

/// Distribution step minimizing the objective over row-stochastic D exactly.
/// Atoms with zero weight get the unit row of the category whose mass would
/// lower the objective fastest. `warm_start` (N x m, or empty) seeds the solver.
Eigen::MatrixXd solve_distributions_coupled(const IncidenceMatrix& incidence, const Eigen::MatrixXd& R,
                                            const Eigen::VectorXd& P, ObjectiveVariant variant,
                                            const NnlsOptions& nnls_options,
                                            const Eigen::MatrixXd& warm_start = Eigen::MatrixXd());

/// Time-weight step for fixed distributions: NNLS on the flattened residual
/// operator stacked over a sum-to-one row weighted by its infinity norm (times
/// `weight_boost`), then normalized.
Eigen::VectorXd solve_time_weights(const IncidenceMatrix& incidence, const Eigen::MatrixXd& R,
                                   const Eigen::MatrixXd& D, const Eigen::VectorXd& P_prev, ObjectiveVariant variant,
                                   const NnlsOptions& nnls_options, double weight_boost = 1.0);

/// Alternating NNLS over D and P starting from uniform time weights, with
/// Anderson extrapolation of P. The best iterate seen is returned. Throws
/// UncoveredAtom, NonFiniteObjective or DimensionMismatch; hitting
/// max_outer_iter returns the best iterate with converged = false.
ReconstructionResult reconstruct(const IncidenceMatrix& incidence, const WindowObservations& obs,
                                 const ReconstructionConfig& config = {});

// Shared with the baselines: shape and coverage preconditions.
void check_reconstruction_input(const IncidenceMatrix& incidence, const WindowObservations& obs);

}  // namespace driftwin
