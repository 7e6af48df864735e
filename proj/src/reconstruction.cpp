#include "driftwin/reconstruction.hpp"

#include <cmath>
#include <algorithm>
#include <deque>
#include <limits>
#include <optional>

#include "driftwin/error.hpp"

namespace driftwin {

namespace {

constexpr int kCoupledRounds = 200;
constexpr double kRowSumTol = 1e-14;

void check_shapes(const IncidenceMatrix& incidence, const WindowObservations& obs, const DistributionProcess& process) {
    if (incidence.windows() != obs.R.rows() || incidence.atoms() != process.P.size() ||
        process.D.rows() != process.P.size() || process.D.cols() != obs.R.cols())
        throw Error(ErrorCode::DimensionMismatch, "incidence, observations and process shapes disagree");
}

// Rows of the flattened residual operator: entry ((i, j), t) = W_it (D_tj - R_ij),
// optionally scaled per window.
Eigen::MatrixXd residual_operator(const Eigen::MatrixXd& W, const Eigen::MatrixXd& D, const Eigen::MatrixXd& R,
                                  const Eigen::VectorXd& row_scale) {
    const Eigen::Index n = W.rows(), N = W.cols(), m = D.cols();
    Eigen::MatrixXd S(n * m, N);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            for (Eigen::Index t = 0; t < N; ++t) S(i * m + j, t) = row_scale(i) * W(i, t) * (D(t, j) - R(i, j));
    return S;
}

// Extrapolated P from the recent (input, output) history; entries are kept at
// least half of the latest plain output so no atom is switched off by mixing.
std::optional<Eigen::VectorXd> anderson_mix(const std::deque<Eigen::VectorXd>& inputs,
                                            const std::deque<Eigen::VectorXd>& outputs) {
    const auto k = static_cast<Eigen::Index>(inputs.size());
    if (k < 2) return std::nullopt;
    const Eigen::Index N = inputs.front().size();
    Eigen::MatrixXd dF(N, k - 1), dG(N, k - 1);
    for (Eigen::Index i = 0; i + 1 < k; ++i) {
        const auto u = static_cast<std::size_t>(i);
        dF.col(i) = (outputs[u + 1] - inputs[u + 1]) - (outputs[u] - inputs[u]);
        dG.col(i) = outputs[u + 1] - outputs[u];
    }
    const Eigen::VectorXd gamma = dF.colPivHouseholderQr().solve(outputs.back() - inputs.back());
    const Eigen::VectorXd& base = outputs.back();
    Eigen::VectorXd mixed = base - dG * gamma;
    if (!mixed.allFinite()) return std::nullopt;
    double theta = 1.0;
    for (Eigen::Index t = 0; t < N; ++t)
        if (mixed(t) < 0.5 * base(t)) theta = std::min(theta, 0.5 * base(t) / (base(t) - mixed(t)));
    mixed = base + theta * (mixed - base);
    const double sum = mixed.sum();
    if (!(sum > 0.0) || mixed.minCoeff() < 0.0) return std::nullopt;
    return Eigen::VectorXd(mixed / sum);
}

Eigen::VectorXd normalized_or(const Eigen::VectorXd& v, const Eigen::VectorXd& fallback) {
    const double s = v.sum();
    if (!(s > 0.0) || !std::isfinite(s)) return fallback;
    return v / s;
}

}  // namespace

void check_reconstruction_input(const IncidenceMatrix& incidence, const WindowObservations& obs) {
    validate_observations(obs);
    if (incidence.windows() != obs.R.rows()) throw Error(ErrorCode::DimensionMismatch, "incidence and R rows differ");
    if (incidence.atoms() < 1 || incidence.windows() < 1) throw Error(ErrorCode::EmptyInput, "no atoms or windows");
    if (obs.R.cols() < 2) throw Error(ErrorCode::InvalidInput, "at least two categories are required");
    for (Eigen::Index t = 0; t < incidence.atoms(); ++t)
        if (!(incidence.entries.col(t).cwiseAbs().sum() > 0.0))
            throw Error(ErrorCode::UncoveredAtom, "atom " + std::to_string(t) + " lies in no window");
}

double objective(const IncidenceMatrix& incidence, const WindowObservations& obs, const DistributionProcess& process) {
    check_shapes(incidence, obs, process);
    const Eigen::MatrixXd& W = incidence.entries;
    const Eigen::VectorXd mass = W * process.P;
    return (W * process.P.asDiagonal() * process.D - mass.asDiagonal() * obs.R).squaredNorm();
}

double direct_objective(const IncidenceMatrix& incidence, const WindowObservations& obs,
                        const DistributionProcess& process) {
    check_shapes(incidence, obs, process);
    const Eigen::MatrixXd& W = incidence.entries;
    const Eigen::VectorXd mass = W * process.P;
    const Eigen::MatrixXd weighted = W * process.P.asDiagonal() * process.D;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
        // A window without mass predicts nothing; its whole row counts as error.
        const Eigen::RowVectorXd pred =
            mass(i) > 0.0 ? Eigen::RowVectorXd(weighted.row(i) / mass(i)) : Eigen::RowVectorXd::Zero(obs.R.cols());
        sum += (pred - obs.R.row(i)).squaredNorm();
    }
    return sum;
}

double objective(const IncidenceMatrix& incidence, const WindowObservations& obs, const DistributionProcess& process,
                 ObjectiveVariant variant) {
    return variant == ObjectiveVariant::Constrained ? objective(incidence, obs, process)
                                                    : direct_objective(incidence, obs, process);
}

Eigen::MatrixXd solve_distributions(const IncidenceMatrix& incidence, const Eigen::MatrixXd& R,
                                    const Eigen::VectorXd& P, ObjectiveVariant variant,
                                    const NnlsOptions& nnls_options) {
    const Eigen::MatrixXd& W = incidence.entries;
    const Eigen::Index N = W.cols(), m = R.cols();
    const Eigen::VectorXd mass = W * P;

    Eigen::MatrixXd A = W * P.asDiagonal();
    Eigen::MatrixXd B = mass.asDiagonal() * R;
    if (variant == ObjectiveVariant::Direct) {
        for (Eigen::Index i = 0; i < W.rows(); ++i) {
            const double s = mass(i) > 0.0 ? 1.0 / mass(i) : 0.0;
            A.row(i) *= s;
            B.row(i) = s > 0.0 ? Eigen::RowVectorXd(R.row(i)) : Eigen::RowVectorXd::Zero(m);
        }
    }

    Eigen::MatrixXd D(N, m);
    for (Eigen::Index j = 0; j < m; ++j) D.col(j) = nnls(A, B.col(j), nnls_options).x;

    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(m);
    std::vector<Eigen::Index> empty;
    for (Eigen::Index t = 0; t < N; ++t) {
        const double s = D.row(t).sum();
        if (s > 0.0) {
            D.row(t) /= s;
            mean += P(t) * D.row(t);
        } else {
            empty.push_back(t);
        }
    }
    if (!empty.empty()) {
        mean = mean.sum() > 0.0 ? Eigen::RowVectorXd(mean / mean.sum())
                                : Eigen::RowVectorXd::Constant(m, 1.0 / static_cast<double>(m));
        for (auto t : empty) D.row(t) = mean;
    }
    return D;
}

Eigen::VectorXd solve_time_weights(const IncidenceMatrix& incidence, const Eigen::MatrixXd& R,
                                   const Eigen::MatrixXd& D, const Eigen::VectorXd& P_prev, ObjectiveVariant variant,
                                   const NnlsOptions& nnls_options, double weight_boost) {
    const Eigen::MatrixXd& W = incidence.entries;
    const Eigen::Index n = W.rows(), N = W.cols();
    Eigen::VectorXd row_scale = Eigen::VectorXd::Ones(n);
    if (variant == ObjectiveVariant::Direct) {
        const Eigen::VectorXd mass = W * P_prev;
        for (Eigen::Index i = 0; i < n; ++i) row_scale(i) = mass(i) > 0.0 ? 1.0 / mass(i) : 0.0;
    }
    const Eigen::MatrixXd S = residual_operator(W, D, R, row_scale);
    const double s_norm = S.cwiseAbs().rowwise().sum().maxCoeff();
    const double weight = (s_norm > 0.0 ? s_norm : 1.0) * weight_boost;
    Eigen::MatrixXd A(S.rows() + 1, N);
    A.topRows(S.rows()) = S;
    A.row(S.rows()).setConstant(weight);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(S.rows() + 1);
    b(S.rows()) = weight;
    return normalized_or(nnls(A, b, nnls_options).x, P_prev);
}

namespace {

// Per-window scaling of the objective: 1 for the constrained form, 1/(WP)_i for the direct form.
Eigen::VectorXd window_scale(const Eigen::VectorXd& mass, ObjectiveVariant variant) {
    Eigen::VectorXd s = Eigen::VectorXd::Ones(mass.size());
    if (variant == ObjectiveVariant::Direct)
        for (Eigen::Index i = 0; i < mass.size(); ++i) s(i) = mass(i) > 0.0 ? 1.0 / mass(i) : 0.0;
    return s;
}

// Gradient of the objective with respect to Q = diag(P) D, evaluated at (P, D).
Eigen::MatrixXd q_gradient(const Eigen::MatrixXd& W, const Eigen::MatrixXd& R, const Eigen::VectorXd& P,
                           const Eigen::MatrixXd& D, ObjectiveVariant variant) {
    const Eigen::VectorXd mass = W * P;
    const Eigen::MatrixXd N = W * P.asDiagonal() * D;
    Eigen::MatrixXd E(R.rows(), R.cols()), Y(R.rows(), R.cols());
    Eigen::VectorXd s = Eigen::VectorXd::Ones(R.rows());
    if (variant == ObjectiveVariant::Constrained) {
        E = N - mass.asDiagonal() * R;
        Y = R;
    } else {
        s = window_scale(mass, variant);
        Y = s.asDiagonal() * N;
        E = Y - R;
    }
    const Eigen::VectorXd coupling = (E.cwiseProduct(Y)).rowwise().sum();
    const Eigen::MatrixXd inner = s.asDiagonal() * (E - coupling * Eigen::RowVectorXd::Ones(R.cols()));
    return 2.0 * W.transpose() * inner;
}

}  // namespace

Eigen::MatrixXd solve_distributions_coupled(const IncidenceMatrix& incidence, const Eigen::MatrixXd& R,
                                            const Eigen::VectorXd& P, ObjectiveVariant variant,
                                            const NnlsOptions& nnls_options, const Eigen::MatrixXd& warm_start) {
    const Eigen::MatrixXd& W = incidence.entries;
    const Eigen::Index n = W.rows(), N = W.cols(), m = R.cols();
    const Eigen::VectorXd mass = W * P;
    const Eigen::VectorXd s = window_scale(mass, variant);

    std::vector<Eigen::Index> active;
    for (Eigen::Index t = 0; t < N; ++t)
        if (P(t) > 0.0) active.push_back(t);
    const auto k = static_cast<Eigen::Index>(active.size());

    Eigen::MatrixXd A(n, k);
    for (Eigen::Index a = 0; a < k; ++a) A.col(a) = s.cwiseProduct(W.col(active[a])) * P(active[a]);
    Eigen::MatrixXd B = variant == ObjectiveVariant::Constrained ? Eigen::MatrixXd(mass.asDiagonal() * R)
                                                                 : Eigen::MatrixXd(s.cwiseProduct(mass).asDiagonal() * R);
    if (n > k) {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
        B = (qr.householderQ().adjoint() * B).topRows(k);
        A = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    }
    const Eigen::Index r = A.rows();

    // vec(D) over active rows, category-major; the last k rows tie each row sum to its target.
    double c = 0.0;
    for (Eigen::Index a = 0; a < k; ++a) c = std::max(c, A.col(a).norm());
    if (!(c > 0.0)) c = 1.0;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(r * m + k, k * m);
    Eigen::VectorXd rhs(r * m + k);
    for (Eigen::Index j = 0; j < m; ++j) {
        M.block(j * r, j * k, r, k) = A;
        rhs.segment(j * r, r) = B.col(j);
        for (Eigen::Index a = 0; a < k; ++a) M(r * m + a, j * k + a) = c;
    }

    Eigen::VectorXd x;
    if (warm_start.rows() == N && warm_start.cols() == m) {
        x.resize(k * m);
        for (Eigen::Index j = 0; j < m; ++j)
            for (Eigen::Index a = 0; a < k; ++a) x(j * k + a) = warm_start(active[a], j);
    }
    // Multiplier updates on the shifted targets drive the row sums to exactly one.
    Eigen::VectorXd target = Eigen::VectorXd::Ones(k);
    for (int round = 0; round < kCoupledRounds; ++round) {
        rhs.tail(k) = c * target;
        x = nnls(M, rhs, nnls_options, x).x;
        Eigen::VectorXd gap = Eigen::VectorXd::Ones(k);
        for (Eigen::Index j = 0; j < m; ++j) gap -= x.segment(j * k, k);
        target += gap;
        if (gap.cwiseAbs().maxCoeff() <= kRowSumTol) break;
    }

    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index a = 0; a < k; ++a) D(active[a], j) = x(j * k + a);
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(m);
    for (auto t : active) {
        const double sum = D.row(t).sum();
        if (sum > 0.0) D.row(t) /= sum;
        else D.row(t).setConstant(1.0 / static_cast<double>(m));
        mean += P(t) * D.row(t);
    }
    if (k == N) return D;

    // Atoms without weight: point each row at the category along which adding mass
    // lowers the objective fastest, so the next P-step can revive the atom.
    const Eigen::MatrixXd grad = q_gradient(W, R, P, D, variant);
    for (Eigen::Index t = 0; t < N; ++t) {
        if (P(t) > 0.0) continue;
        Eigen::Index best = 0;
        grad.row(t).minCoeff(&best);
        D.row(t).setZero();
        D(t, best) = 1.0;
    }
    return D;
}

ReconstructionResult reconstruct(const IncidenceMatrix& incidence, const WindowObservations& obs,
                                 const ReconstructionConfig& config) {
    check_reconstruction_input(incidence, obs);
    if (config.max_outer_iter < 1 || !(config.convergence_tol > 0.0) || !(config.relative_tol > 0.0) ||
        config.stall_window < 1)
        throw Error(ErrorCode::InvalidInput, "iteration limit, stall window and tolerances must be positive");

    const Eigen::MatrixXd& R = obs.R;
    const Eigen::Index N = incidence.atoms();
    const auto variant = config.objective_variant;

    auto eval = [&](const DistributionProcess& p) {
        const double f = objective(incidence, obs, p, variant);
        if (!std::isfinite(f)) throw Error(ErrorCode::NonFiniteObjective, "objective is not finite");
        return f;
    };
    // One sweep of the alternation: D for the given P, then P for that D.
    auto sweep = [&](const Eigen::VectorXd& P, const Eigen::MatrixXd& D_prev, DistributionProcess& out) {
        out.D = config.distribution_step == DistributionStep::Coupled
                    ? solve_distributions_coupled(incidence, R, P, variant, config.nnls, D_prev)
                    : solve_distributions(incidence, R, P, variant, config.nnls);
        out.P = solve_time_weights(incidence, R, out.D, P, variant, config.nnls);
        return eval(out);
    };

    DistributionProcess cur;
    double f_cur = sweep(Eigen::VectorXd::Constant(N, 1.0 / static_cast<double>(N)), Eigen::MatrixXd(), cur);
    DistributionProcess best = cur;
    double f_best = f_cur;

    ReconstructionResult result;
    result.iterations = 1;
    result.objective_trace.push_back(f_best);

    // Anderson mixing on the fixed-point map P -> sweep(P).P.
    std::deque<Eigen::VectorXd> inputs, outputs;
    const std::size_t memory = std::min(config.acceleration_memory, static_cast<std::size_t>(N));
    double f_ref = f_best;
    std::size_t since_ref = 0;
    while (f_best > 0.0) {
        if (result.iterations >= config.max_outer_iter) break;
        ++result.iterations;

        DistributionProcess next;
        double f_next = sweep(cur.P, cur.D, next);
        if (memory > 0) {
            inputs.push_back(cur.P);
            outputs.push_back(next.P);
            if (inputs.size() > memory + 1) {
                inputs.pop_front();
                outputs.pop_front();
            }
            if (auto mixed = anderson_mix(inputs, outputs)) {
                DistributionProcess alt;
                const double f_alt = sweep(*mixed, next.D, alt);
                if (f_alt < f_next) {
                    next = std::move(alt);
                    f_next = f_alt;
                }
            }
        }
        cur = std::move(next);
        f_cur = f_next;
        if (f_cur < f_best) {
            best = cur;
            f_best = f_cur;
        }
        result.objective_trace.push_back(f_best);

        // Converged once the best value stops moving over a whole window of iterations.
        if (f_ref - f_best >= config.convergence_tol && f_ref - f_best >= config.relative_tol * f_ref) {
            f_ref = f_best;
            since_ref = 0;
        } else if (++since_ref >= config.stall_window) {
            result.converged = true;
            break;
        }
    }
    if (f_best == 0.0) result.converged = true;

    result.process = std::move(best);
    result.objective = objective(incidence, obs, result.process);
    return result;
}

}  // namespace driftwin
