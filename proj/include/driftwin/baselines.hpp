#pragma once

#include <cstddef>
#include <functional>

#include <Eigen/Dense>

#include "driftwin/reconstruction.hpp"

namespace driftwin {

struct SimplexState {
    Eigen::MatrixXd vertices;  // (d+1) x d, one vertex per row
    Eigen::VectorXd values;    // ascending, aligned with vertices
};

struct NelderMeadOptions {
    std::size_t max_iter = 0;  // 0 selects 200 * dimension
    double f_tol = 1e-16;      // spread of vertex values
    double x_tol = 1e-10;      // largest vertex distance from the best one
    double initial_step = 0.05;
    double reflect = 1.0;
    double expand = 2.0;
    double contract = 0.5;
    double shrink = 0.5;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    std::vector<double> best_trace;  // best vertex value after each iteration
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
};

/// Downhill simplex minimization starting from x0 plus one coordinate step per vertex.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                             const NelderMeadOptions& options = {});

/// Baseline: Nelder-Mead over P = softmax(x), with D recomputed by the column-wise
/// distribution step for every evaluated P. Same preconditions and result shape
/// as reconstruct; converged = false when the iteration limit is hit.
ReconstructionResult nelder_mead_reconstruct(const IncidenceMatrix& incidence, const WindowObservations& obs,
                                             const ReconstructionConfig& config = {},
                                             const NelderMeadOptions& options = {});

Eigen::VectorXd softmax(const Eigen::VectorXd& x);

}  // namespace driftwin
