#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace driftwin {

struct NnlsOptions {
    std::size_t max_iter = 0;  // 0 selects 3 * columns
    double tol = 1e-10;
};

struct NnlsResult {
    Eigen::VectorXd x;
    double residual_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;  // false: iteration limit hit, x is the last feasible iterate
};

/// Lawson-Hanson active-set solver for min ||Ax - b|| subject to x >= 0.
/// Tall problems are first reduced to their triangular QR factor, which leaves
/// the minimizer unchanged. Entering-variable ties go to the lowest index.
/// Throws DimensionMismatch on inconsistent shapes.
NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const NnlsOptions& options = {});

/// Same, starting the active set from the support of `warm_start` (typically a
/// previous solution of a nearby problem). An empty vector means a cold start.
NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const NnlsOptions& options,
                const Eigen::VectorXd& warm_start);

/// Largest violation of the NNLS optimality conditions, relative to
/// ||A^T A||_inf: for x_i > 0 the gradient component must vanish, for x_i = 0
/// it must be non-negative. Zero for an exact optimum.
double nnls_kkt_violation(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& x);

}  // namespace driftwin
