#include "driftwin/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "driftwin/error.hpp"

namespace driftwin {

namespace {

// Least squares on the passive columns; inactive entries of the result are 0.
Eigen::VectorXd passive_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const std::vector<char>& passive) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < A.cols(); ++j)
        if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
    Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = A.col(cols[k]);
    const Eigen::VectorXd zsub = sub.colPivHouseholderQr().solve(b);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(A.cols());
    for (std::size_t k = 0; k < cols.size(); ++k) z(cols[k]) = zsub(static_cast<Eigen::Index>(k));
    return z;
}

double gram_inf_norm(const Eigen::MatrixXd& A) {
    const Eigen::MatrixXd gram = A.transpose() * A;
    return gram.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

NnlsResult nnls(const Eigen::MatrixXd& A_in, const Eigen::VectorXd& b_in, const NnlsOptions& options) {
    return nnls(A_in, b_in, options, Eigen::VectorXd());
}

NnlsResult nnls(const Eigen::MatrixXd& A_in, const Eigen::VectorXd& b_in, const NnlsOptions& options,
                const Eigen::VectorXd& warm_start) {
    if (A_in.rows() < 1 || A_in.cols() < 1) throw Error(ErrorCode::DimensionMismatch, "nnls needs a nonempty matrix");
    if (A_in.rows() != b_in.size()) throw Error(ErrorCode::DimensionMismatch, "nnls: rows of A and length of b differ");
    if (warm_start.size() != 0 && warm_start.size() != A_in.cols())
        throw Error(ErrorCode::DimensionMismatch, "nnls: warm start has the wrong length");
    const Eigen::Index q = A_in.cols();
    const std::size_t max_iter = options.max_iter ? options.max_iter : 3 * static_cast<std::size_t>(q);

    // ||Ax - b||^2 = ||Rx - c||^2 + ||tail||^2 with A = QR, c = (Q^T b)[0:q].
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    double tail_sq = 0.0;
    if (A_in.rows() > q) {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(A_in);
        const Eigen::VectorXd qtb = qr.householderQ().adjoint() * b_in;
        A = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
        b = qtb.head(q);
        tail_sq = qtb.tail(A_in.rows() - q).squaredNorm();
    } else {
        A = A_in;
        b = b_in;
    }

    const double gnorm = gram_inf_norm(A);
    const double tol_w = options.tol * (gnorm > 0.0 ? gnorm : 1.0);

    NnlsResult res;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(q);
    std::vector<char> passive(static_cast<std::size_t>(q), 0), blocked(static_cast<std::size_t>(q), 0);
    if (warm_start.size() != 0) {
        for (Eigen::Index j = 0; j < q; ++j) passive[static_cast<std::size_t>(j)] = warm_start(j) > 0.0;
        // Shrink the guessed support until its least-squares solution is strictly positive.
        for (Eigen::Index guard = 0; guard <= q; ++guard) {
            if (std::none_of(passive.begin(), passive.end(), [](char c) { return c != 0; })) break;
            const Eigen::VectorXd z = passive_solve(A, b, passive);
            bool feasible = true;
            for (Eigen::Index j = 0; j < q; ++j)
                if (passive[static_cast<std::size_t>(j)] && !(z(j) > 0.0)) {
                    passive[static_cast<std::size_t>(j)] = 0;
                    feasible = false;
                }
            if (feasible) {
                x = z;
                break;
            }
        }
    }
    Eigen::VectorXd w = A.transpose() * (b - A * x);

    for (;;) {
        Eigen::Index enter = -1;
        double best = tol_w;
        for (Eigen::Index j = 0; j < q; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            if (!passive[uj] && !blocked[uj] && w(j) > best) {
                best = w(j);
                enter = j;
            }
        }
        if (enter < 0) {
            res.converged = true;
            break;
        }
        if (res.iterations >= max_iter) break;
        ++res.iterations;
        passive[static_cast<std::size_t>(enter)] = 1;

        bool first_pass = true;
        for (Eigen::Index guard = 0; guard <= q; ++guard) {
            const Eigen::VectorXd z = passive_solve(A, b, passive);
            bool feasible = true;
            for (Eigen::Index j = 0; j < q; ++j)
                if (passive[static_cast<std::size_t>(j)] && !(z(j) > 0.0)) feasible = false;
            if (feasible) {
                x = z;
                std::fill(blocked.begin(), blocked.end(), 0);
                break;
            }
            if (first_pass && !(z(enter) > 0.0)) {
                // Rounding made the entering gradient look positive; skip it until x moves.
                passive[static_cast<std::size_t>(enter)] = 0;
                blocked[static_cast<std::size_t>(enter)] = 1;
                break;
            }
            first_pass = false;
            double alpha = 1.0;
            Eigen::Index blocking = -1;
            for (Eigen::Index j = 0; j < q; ++j)
                if (passive[static_cast<std::size_t>(j)] && !(z(j) > 0.0)) {
                    const double step = x(j) / (x(j) - z(j));
                    if (blocking < 0 || step < alpha) {
                        alpha = step;
                        blocking = j;
                    }
                }
            x += alpha * (z - x);
            x(blocking) = 0.0;
            for (Eigen::Index j = 0; j < q; ++j) {
                const auto uj = static_cast<std::size_t>(j);
                if (passive[uj] && !(x(j) > 0.0)) {
                    passive[uj] = 0;
                    x(j) = 0.0;
                }
            }
        }
        w = A.transpose() * (b - A * x);
    }

    res.x = x.cwiseMax(0.0);
    res.residual_norm = std::sqrt((A * res.x - b).squaredNorm() + tail_sq);
    return res;
}

double nnls_kkt_violation(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& x) {
    const Eigen::VectorXd grad = A.transpose() * (A * x - b);
    const double gnorm = gram_inf_norm(A);
    const double scale = gnorm > 0.0 ? gnorm : 1.0;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x(i) < 0.0) worst = std::max(worst, -x(i));
        const double v = x(i) > 0.0 ? std::abs(grad(i)) : std::max(0.0, -grad(i));
        worst = std::max(worst, v / scale);
    }
    return worst;
}

}  // namespace driftwin
