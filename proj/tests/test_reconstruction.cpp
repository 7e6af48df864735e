#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "driftwin/benchmark.hpp"
#include "driftwin/error.hpp"
#include "driftwin/instances.hpp"
#include "driftwin/reconstruction.hpp"
#include "oracles.hpp"

using namespace driftwin;

namespace {

bool non_increasing(const std::vector<double>& trace, double slack = 1e-12) {
    for (std::size_t k = 1; k < trace.size(); ++k)
        if (trace[k] > trace[k - 1] + slack) return false;
    return true;
}

void check_feasible(const DistributionProcess& p) {
    CHECK(p.P.minCoeff() >= 0.0);
    CHECK(std::abs(p.P.sum() - 1.0) <= 1e-12);
    CHECK(p.D.minCoeff() >= 0.0);
    CHECK((p.D.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidInput;
}

}  // namespace

TEST_CASE("single atom averages the window rows") {
    Eigen::MatrixXd R(3, 3);
    R << 0.2, 0.3, 0.5, 0.4, 0.4, 0.2, 0.3, 0.5, 0.2;
    IncidenceMatrix W{Eigen::MatrixXd::Ones(3, 1)};
    const auto res = reconstruct(W, {R, W});
    CHECK(res.converged);
    CHECK(res.process.P(0) == 1.0);
    const Eigen::RowVectorXd mean = R.colwise().mean();
    CHECK((res.process.D.row(0) - mean).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(res.objective == doctest::Approx((R.rowwise() - mean).squaredNorm()).epsilon(1e-10));

    const Eigen::MatrixXd same = mean.replicate(3, 1);
    CHECK(reconstruct(W, {same, W}).objective <= 1e-28);
}

TEST_CASE("constant observations") {
    const Instance inst = make_instance(1.4, 5);
    const Eigen::RowVectorXd d = inst.truth.D.row(0);
    WindowObservations obs{d.replicate(inst.obs.R.rows(), 1), inst.obs.incidence};
    const auto res = reconstruct(obs.incidence, obs);
    CHECK(res.objective <= 1e-20);
    for (Eigen::Index t = 0; t < res.process.P.size(); ++t)
        if (res.process.P(t) > 1e-12) CHECK((res.process.D.row(t) - d).cwiseAbs().maxCoeff() <= 1e-9);
    check_feasible(res.process);
}

TEST_CASE("rank-2 instance is recovered") {
    InstanceOptions opt;
    opt.min_identifiability = 1e-6;
    for (std::uint64_t seed : {1, 2, 3}) {
        const Instance inst = make_instance(2.0, seed, opt);
        const auto res = reconstruct(inst.obs.incidence, inst.obs);
        CHECK(res.converged);
        CHECK(res.objective <= 1e-12);
        CHECK(median_abs_error(res.process.D, inst.truth.D) <= 1e-6);
        CHECK(non_increasing(res.objective_trace));
        check_feasible(res.process);
        CHECK(res.objective == doctest::Approx(objective(inst.obs.incidence, inst.obs, res.process)).epsilon(1e-10));
    }
}

TEST_CASE("objective values") {
    const Instance inst = make_instance(1.9, 8);
    const auto& W = inst.obs.incidence;
    CHECK(objective(W, inst.obs, inst.truth) <= 1e-20);

    // Swap weights of two atoms with distinct rows.
    DistributionProcess swapped = inst.truth;
    Eigen::Index a = 0, b = 1;
    std::swap(swapped.P(a), swapped.P(b));
    if (std::abs(inst.truth.P(a) - inst.truth.P(b)) > 1e-6) CHECK(objective(W, inst.obs, swapped) > 1e-12);

    // direct = sum_i constrained_i / (WP)_i^2
    DistributionProcess other = swapped;
    const Eigen::VectorXd mass = W.entries * other.P;
    const Eigen::MatrixXd diff = W.entries * other.P.asDiagonal() * other.D - mass.asDiagonal() * inst.obs.R;
    double expected = 0.0;
    for (Eigen::Index i = 0; i < diff.rows(); ++i) expected += diff.row(i).squaredNorm() / (mass(i) * mass(i));
    CHECK(direct_objective(W, inst.obs, other) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(objective(W, inst.obs, other, ObjectiveVariant::Direct) == direct_objective(W, inst.obs, other));

    DistributionProcess wrong = inst.truth;
    wrong.P.conservativeResize(wrong.P.size() + 1);
    CHECK(code_of([&] { objective(W, inst.obs, wrong); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("noisy observations reach the convex minimum over Q") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 0.02);
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const Instance inst = make_instance(1.9, 300 + seed);
        WindowObservations obs = inst.obs;
        for (Eigen::Index i = 0; i < obs.R.size(); ++i) obs.R.data()[i] += u(rng);
        for (Eigen::Index i = 0; i < obs.R.rows(); ++i) obs.R.row(i) /= obs.R.row(i).sum();

        const Eigen::MatrixXd Q = oracle::q_space_minimizer(obs.incidence.entries, obs.R);
        DistributionProcess best;
        best.P = Q.rowwise().sum();
        best.D = Q;
        for (Eigen::Index t = 0; t < Q.rows(); ++t)
            best.D.row(t) = best.P(t) > 0 ? Eigen::RowVectorXd(Q.row(t) / best.P(t))
                                          : Eigen::RowVectorXd::Constant(Q.cols(), 1.0 / Q.cols());
        const double f_star = objective(obs.incidence, obs, best);

        const auto res = reconstruct(obs.incidence, obs);
        CHECK(res.objective <= f_star * (1 + 1e-6) + 1e-14);
        CHECK(res.objective >= f_star * (1 - 1e-6) - 1e-14);
        CHECK(non_increasing(res.objective_trace));
        check_feasible(res.process);
    }
}

TEST_CASE("permuting atoms permutes the solution") {
    InstanceOptions opt;
    opt.min_identifiability = 1e-6;
    const Instance inst = make_instance(2.2, 4, opt);
    const Eigen::Index N = inst.truth.P.size();
    std::vector<Eigen::Index> perm(N);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(4);
    std::shuffle(perm.begin(), perm.end(), rng);

    IncidenceMatrix Wp{Eigen::MatrixXd(inst.obs.R.rows(), N)};
    for (Eigen::Index t = 0; t < N; ++t) Wp.entries.col(t) = inst.obs.incidence.entries.col(perm[t]);
    const auto a = reconstruct(inst.obs.incidence, inst.obs);
    const auto b = reconstruct(Wp, {inst.obs.R, Wp});
    for (Eigen::Index t = 0; t < N; ++t) {
        CHECK(std::abs(b.process.P(t) - a.process.P(perm[t])) <= 1e-8);
        CHECK((b.process.D.row(t) - a.process.D.row(perm[t])).cwiseAbs().maxCoeff() <= 1e-6);
    }
    for (std::size_t k = 0; k < std::min<std::size_t>(5, a.objective_trace.size()); ++k)
        CHECK(b.objective_trace[k] == doctest::Approx(a.objective_trace[k]).epsilon(1e-8));
}

TEST_CASE("the literal column-wise step and the direct variant stay feasible and monotone") {
    const Instance inst = make_instance(1.9, 9);
    ReconstructionConfig cfg;
    cfg.distribution_step = DistributionStep::Columnwise;
    cfg.max_outer_iter = 300;
    auto res = reconstruct(inst.obs.incidence, inst.obs, cfg);
    check_feasible(res.process);
    CHECK(non_increasing(res.objective_trace));
    CHECK(res.objective_trace.size() == res.iterations);

    cfg = {};
    cfg.objective_variant = ObjectiveVariant::Direct;
    cfg.max_outer_iter = 300;
    res = reconstruct(inst.obs.incidence, inst.obs, cfg);
    check_feasible(res.process);
    CHECK(non_increasing(res.objective_trace));
}

TEST_CASE("distribution steps") {
    const Instance inst = make_instance(2.2, 12);
    const auto& W = inst.obs.incidence;
    const Eigen::MatrixXd Dc = solve_distributions_coupled(W, inst.obs.R, inst.truth.P, ObjectiveVariant::Constrained, {});
    CHECK((Dc - inst.truth.D).cwiseAbs().maxCoeff() <= 1e-8);
    const Eigen::MatrixXd Dw = solve_distributions(W, inst.obs.R, inst.truth.P, ObjectiveVariant::Constrained, {});
    CHECK((Dw.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);

    // The exact step never does worse than the column-wise one for the same P.
    const Eigen::VectorXd P = Eigen::VectorXd::Constant(inst.truth.P.size(), 1.0 / inst.truth.P.size());
    const Eigen::MatrixXd a = solve_distributions_coupled(W, inst.obs.R, P, ObjectiveVariant::Constrained, {});
    const Eigen::MatrixXd b = solve_distributions(W, inst.obs.R, P, ObjectiveVariant::Constrained, {});
    CHECK(objective(W, inst.obs, {P, a, {}}) <= objective(W, inst.obs, {P, b, {}}) + 1e-14);

    // Zero-weight atoms still get a valid row.
    Eigen::VectorXd Pz = P;
    Pz(0) = 0.0;
    Pz /= Pz.sum();
    const Eigen::MatrixXd z = solve_distributions_coupled(W, inst.obs.R, Pz, ObjectiveVariant::Constrained, {});
    CHECK(z.row(0).sum() == doctest::Approx(1.0));
    CHECK(z.row(0).maxCoeff() == 1.0);
}

TEST_CASE("iteration limit returns the best iterate") {
    const Instance inst = make_instance(2.2, 13);
    ReconstructionConfig cfg;
    cfg.max_outer_iter = 3;
    const auto res = reconstruct(inst.obs.incidence, inst.obs, cfg);
    CHECK_FALSE(res.converged);
    CHECK(res.iterations == 3);
    CHECK(res.objective_trace.size() == 3);
    CHECK(res.objective == doctest::Approx(res.objective_trace.back()).epsilon(1e-12));
    check_feasible(res.process);
}

TEST_CASE("input errors") {
    Eigen::MatrixXd W(2, 3);
    W << 1, 1, 0, 1, 1, 0;
    Eigen::MatrixXd R = Eigen::MatrixXd::Constant(2, 2, 0.5);
    CHECK(code_of([&] { reconstruct({W}, {R, {W}}); }) == ErrorCode::UncoveredAtom);

    IncidenceMatrix ok{Eigen::MatrixXd::Ones(2, 2)};
    CHECK(code_of([&] { reconstruct(ok, {Eigen::MatrixXd::Constant(3, 2, 0.5), ok}); }) == ErrorCode::DimensionMismatch);
    CHECK(code_of([&] { reconstruct(ok, {Eigen::MatrixXd::Ones(2, 1), ok}); }) == ErrorCode::InvalidInput);

    ReconstructionConfig cfg;
    cfg.convergence_tol = 0.0;
    CHECK(code_of([&] { reconstruct(ok, {R, ok}, cfg); }) == ErrorCode::InvalidInput);

    IncidenceMatrix huge{Eigen::MatrixXd::Constant(2, 2, 1e300)};
    huge.entries(0, 1) = 0.0;
    Eigen::MatrixXd Rh(2, 2);
    Rh << 1, 0, 0, 1;
    CHECK(code_of([&] { reconstruct(huge, {Rh, huge}); }) == ErrorCode::NonFiniteObjective);
}
