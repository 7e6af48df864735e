#pragma once

// Independent reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "driftwin/window_algebra.hpp"

namespace oracle {

// Accelerated projected gradient with gradient-based restart for min ||Ax - b||^2, x >= 0.
inline Eigen::VectorXd projected_gradient_nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                               std::size_t max_iter = 1000000) {
    const Eigen::MatrixXd G = A.transpose() * A;
    const Eigen::VectorXd c = A.transpose() * b;
    const double L = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G).eigenvalues().maxCoeff();
    if (!(L > 0.0)) return Eigen::VectorXd::Zero(A.cols());
    const double step = 1.0 / L;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(A.cols()), y = x, x_prev = x;
    double t = 1.0;
    for (std::size_t k = 0; k < max_iter; ++k) {
        x_prev = x;
        x = (y - step * (G * y - c)).cwiseMax(0.0);
        if ((y - x).dot(x - x_prev) > 0.0) t = 1.0;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = x + ((t - 1.0) / t_next) * (x - x_prev);
        t = t_next;
        const Eigen::VectorXd g = G * x - c;
        double pg = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) pg = std::max(pg, x(i) > 0.0 ? std::abs(g(i)) : std::max(0.0, -g(i)));
        if (pg <= 1e-14 * L) break;
    }
    return x;
}

inline double sq_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& x) {
    return (A * x - b).squaredNorm();
}

// Sign vector of time point t against every window, or empty when no window holds t.
inline std::vector<std::int8_t> point_signature(std::span<const driftwin::IntervalWindow> windows, double t) {
    std::vector<std::int8_t> sig;
    bool inside_any = false;
    for (const auto& w : windows) {
        bool in = false;
        for (const auto& iv : w.intervals) in = in || (iv.lo <= t && t < iv.hi);
        inside_any = inside_any || in;
        sig.push_back(in ? 1 : -1);
    }
    if (!inside_any) sig.clear();
    return sig;
}

inline std::set<std::vector<std::int8_t>> sampled_signatures(std::span<const driftwin::IntervalWindow> windows,
                                                             driftwin::Interval horizon, std::size_t samples,
                                                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(horizon.lo, horizon.hi);
    std::set<std::vector<std::int8_t>> seen;
    for (std::size_t s = 0; s < samples; ++s) {
        auto sig = point_signature(windows, u(rng));
        if (!sig.empty()) seen.insert(std::move(sig));
    }
    return seen;
}

// Minimizer of the reconstruction problem posed over Q = diag(P) D:
// min ||L vec(Q)||^2 with Q >= 0 and sum(Q) = 1. The objective is homogeneous,
// so a unit-weight sum row followed by rescaling gives the same minimizer.
// Returns Q (N x m).
inline Eigen::MatrixXd q_space_minimizer(const Eigen::MatrixXd& W, const Eigen::MatrixXd& R) {
    const Eigen::Index n = W.rows(), N = W.cols(), m = R.cols();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n * m + 1, N * m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            for (Eigen::Index t = 0; t < N; ++t)
                for (Eigen::Index k = 0; k < m; ++k)
                    L(i * m + j, t * m + k) = W(i, t) * ((k == j ? 1.0 : 0.0) - R(i, j));
    L.row(n * m).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n * m + 1);
    rhs(n * m) = 1.0;
    const Eigen::VectorXd q = projected_gradient_nnls(L, rhs);
    Eigen::MatrixXd Q(N, m);
    for (Eigen::Index t = 0; t < N; ++t)
        for (Eigen::Index k = 0; k < m; ++k) Q(t, k) = q(t * m + k);
    return Q / Q.sum();
}

}  // namespace oracle
