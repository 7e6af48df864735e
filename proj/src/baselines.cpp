#include "driftwin/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "driftwin/error.hpp"

namespace driftwin {

namespace {

void sort_state(SimplexState& s) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(s.values.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s.values(a) < s.values(b); });
    SimplexState sorted{Eigen::MatrixXd(s.vertices.rows(), s.vertices.cols()), Eigen::VectorXd(s.values.size())};
    for (std::size_t k = 0; k < order.size(); ++k) {
        sorted.vertices.row(static_cast<Eigen::Index>(k)) = s.vertices.row(order[k]);
        sorted.values(static_cast<Eigen::Index>(k)) = s.values(order[k]);
    }
    s = std::move(sorted);
}

}  // namespace

Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
    const Eigen::VectorXd e = (x.array() - x.maxCoeff()).exp();
    return e / e.sum();
}

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                             const NelderMeadOptions& options) {
    const Eigen::Index d = x0.size();
    if (d < 1) throw Error(ErrorCode::EmptyInput, "nelder_mead needs at least one parameter");
    const std::size_t max_iter = options.max_iter ? options.max_iter : 200 * static_cast<std::size_t>(d);

    NelderMeadResult res;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++res.evaluations;
        const double v = f(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };

    SimplexState s{Eigen::MatrixXd(d + 1, d), Eigen::VectorXd(d + 1)};
    s.vertices.row(0) = x0.transpose();
    for (Eigen::Index k = 0; k < d; ++k) {
        Eigen::VectorXd v = x0;
        v(k) += options.initial_step;
        s.vertices.row(k + 1) = v.transpose();
    }
    for (Eigen::Index k = 0; k <= d; ++k) s.values(k) = eval(s.vertices.row(k).transpose());
    sort_state(s);

    while (true) {
        const double spread = s.values(d) - s.values(0);
        double diameter = 0.0;
        for (Eigen::Index k = 1; k <= d; ++k)
            diameter = std::max(diameter, (s.vertices.row(k) - s.vertices.row(0)).cwiseAbs().maxCoeff());
        if (spread <= options.f_tol && diameter <= options.x_tol) {
            res.converged = true;
            break;
        }
        if (res.iterations >= max_iter) break;
        ++res.iterations;

        const Eigen::VectorXd centroid = s.vertices.topRows(d).colwise().mean().transpose();
        const Eigen::VectorXd worst = s.vertices.row(d).transpose();
        const Eigen::VectorXd xr = centroid + options.reflect * (centroid - worst);
        const double fr = eval(xr);

        if (fr < s.values(0)) {
            const Eigen::VectorXd xe = centroid + options.expand * (xr - centroid);
            const double fe = eval(xe);
            if (fe < fr) {
                s.vertices.row(d) = xe.transpose();
                s.values(d) = fe;
            } else {
                s.vertices.row(d) = xr.transpose();
                s.values(d) = fr;
            }
        } else if (fr < s.values(d - 1)) {
            s.vertices.row(d) = xr.transpose();
            s.values(d) = fr;
        } else {
            const bool outside = fr < s.values(d);
            const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + options.contract * (xr - centroid))
                                               : Eigen::VectorXd(centroid + options.contract * (worst - centroid));
            const double fc = eval(xc);
            if (fc < (outside ? fr : s.values(d))) {
                s.vertices.row(d) = xc.transpose();
                s.values(d) = fc;
            } else {
                for (Eigen::Index k = 1; k <= d; ++k) {
                    s.vertices.row(k) = s.vertices.row(0) + options.shrink * (s.vertices.row(k) - s.vertices.row(0));
                    s.values(k) = eval(s.vertices.row(k).transpose());
                }
            }
        }
        sort_state(s);
        res.best_trace.push_back(s.values(0));
    }
    res.x = s.vertices.row(0).transpose();
    res.value = s.values(0);
    return res;
}

ReconstructionResult nelder_mead_reconstruct(const IncidenceMatrix& incidence, const WindowObservations& obs,
                                             const ReconstructionConfig& config, const NelderMeadOptions& options) {
    check_reconstruction_input(incidence, obs);
    const Eigen::Index N = incidence.atoms();
    const auto variant = config.objective_variant;

    auto process_at = [&](const Eigen::VectorXd& x) {
        DistributionProcess p;
        p.P = softmax(x);
        p.D = solve_distributions(incidence, obs.R, p.P, variant, config.nnls);
        return p;
    };
    auto f = [&](const Eigen::VectorXd& x) { return objective(incidence, obs, process_at(x), variant); };

    ReconstructionResult result;
    if (N == 1) {
        result.process = process_at(Eigen::VectorXd::Zero(1));
        result.objective_trace.push_back(objective(incidence, obs, result.process, variant));
        result.iterations = 1;
        result.converged = true;
    } else {
        const NelderMeadResult nm = nelder_mead(f, Eigen::VectorXd::Zero(N), options);
        result.process = process_at(nm.x);
        result.objective_trace = nm.best_trace;
        if (result.objective_trace.empty()) result.objective_trace.push_back(nm.value);
        result.iterations = std::max<std::size_t>(nm.iterations, 1);
        result.converged = nm.converged;
    }
    result.objective = objective(incidence, obs, result.process);
    if (!std::isfinite(result.objective)) throw Error(ErrorCode::NonFiniteObjective, "objective is not finite");
    return result;
}

}  // namespace driftwin
