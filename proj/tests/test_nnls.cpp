#include <doctest.h>

#include <random>

#include "driftwin/error.hpp"
#include "driftwin/nnls.hpp"
#include "oracles.hpp"

using namespace driftwin;

TEST_CASE("identity system") {
    const auto r = nnls(Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d(1, 2, 3));
    CHECK(r.converged);
    CHECK((r.x - Eigen::Vector3d(1, 2, 3)).norm() < 1e-15);
    CHECK(r.residual_norm < 1e-15);
}

TEST_CASE("negative component clamps to zero") {
    const auto r = nnls(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1, -1));
    CHECK(r.x(0) == doctest::Approx(1.0));
    CHECK(r.x(1) == 0.0);
    CHECK(r.residual_norm == doctest::Approx(1.0));
}

TEST_CASE("random 6x4 against projected gradient") {
    std::mt19937_64 rng(64);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd A(6, 4);
        Eigen::VectorXd b(6);
        for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
        for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = g(rng);
        const auto r = nnls(A, b);
        const Eigen::VectorXd ref = oracle::projected_gradient_nnls(A, b);
        CHECK((r.x - ref).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(r.residual_norm == doctest::Approx((A * r.x - b).norm()).epsilon(1e-12));
    }
}

TEST_CASE("KKT conditions and clamping bound") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::uniform_int_distribution<int> dim(1, 20);
    for (int trial = 0; trial < 200; ++trial) {
        const int p = dim(rng), q = dim(rng);
        Eigen::MatrixXd A(p, q);
        Eigen::VectorXd b(p);
        for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
        for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = g(rng);
        const auto r = nnls(A, b);
        CHECK(r.converged);
        CHECK(r.x.minCoeff() >= 0.0);
        CHECK(nnls_kkt_violation(A, b, r.x) <= 1e-10);
        CHECK(std::abs(r.residual_norm - (A * r.x - b).norm()) <= 1e-10);
        const Eigen::VectorXd clamped = A.completeOrthogonalDecomposition().solve(b).cwiseMax(0.0);
        CHECK(r.residual_norm <= (A * clamped - b).norm() + 1e-10);
    }
}

TEST_CASE("warm start reaches the same minimizer") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::MatrixXd A(12, 8);
        Eigen::VectorXd b(12);
        for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
        for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = g(rng);
        const auto cold = nnls(A, b);
        Eigen::VectorXd guess(8);
        for (Eigen::Index i = 0; i < 8; ++i) guess(i) = (i % 2) ? 1.0 : 0.0;
        const auto warm = nnls(A, b, {}, guess);
        CHECK((cold.x - warm.x).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("ties go to the lowest index") {
    // Identical columns: the first one enters and stays.
    Eigen::MatrixXd A(2, 2);
    A << 1, 1, 0, 0;
    const auto r = nnls(A, Eigen::Vector2d(1, 0));
    CHECK(r.x(0) == doctest::Approx(1.0));
    CHECK(r.x(1) == 0.0);
}

TEST_CASE("iteration limit and shape errors") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    Eigen::MatrixXd A(10, 10);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
    Eigen::VectorXd b = A * Eigen::VectorXd::Ones(10);
    NnlsOptions opt;
    opt.max_iter = 1;
    const auto r = nnls(A, b, opt);
    CHECK_FALSE(r.converged);
    CHECK(r.x.minCoeff() >= 0.0);

    CHECK_THROWS_AS(nnls(A, Eigen::VectorXd::Ones(3)), Error);
    CHECK_THROWS_AS(nnls(Eigen::MatrixXd(0, 0), Eigen::VectorXd()), Error);
    CHECK_THROWS_AS(nnls(A, b, {}, Eigen::VectorXd::Ones(3)), Error);
}
