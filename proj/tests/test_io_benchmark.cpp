#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "driftwin/benchmark.hpp"
#include "driftwin/error.hpp"
#include "driftwin/io.hpp"
#include "driftwin/parallel.hpp"

using namespace driftwin;

TEST_CASE("matrix CSV round trip is exact") {
    Eigen::MatrixXd M(2, 3);
    M << 0.1, 1.0 / 3.0, -2e-300, 5, 6.02214076e23, 0;
    std::stringstream s;
    write_matrix_csv(s, M);
    CHECK(read_matrix_csv(s) == M);

    std::istringstream with_header("a,b\n1,2\n3,4\n");
    const Eigen::MatrixXd H = read_matrix_csv(with_header);
    CHECK(H.rows() == 2);
    CHECK(H(1, 0) == 3.0);

    std::istringstream ragged("1,2\n3\n");
    CHECK_THROWS_AS(read_matrix_csv(ragged), Error);
    std::istringstream junk("1,2\n3,x\n");
    CHECK_THROWS_AS(read_matrix_csv(junk), Error);
}

TEST_CASE("windows JSON") {
    const auto spec = windows_from_json(Json::parse(R"({"windows": [{"id": "w1", "intervals": [[0, 2]]},
        {"id": "w2", "intervals": [[1, 3], [4, 5]]}], "horizon": [0, 6]})"));
    REQUIRE(spec.windows.size() == 2);
    CHECK(spec.windows[1].intervals == IntervalSet{{1, 3}, {4, 5}});
    REQUIRE(spec.horizon);
    CHECK(*spec.horizon == Interval{0, 6});

    // A bare array is accepted too.
    CHECK(windows_from_json(Json::parse(R"([{"id": "a", "intervals": [[0, 1]]}])")).windows.size() == 1);
    CHECK_THROWS_AS(windows_from_json(Json::parse(R"({"windows": [{"id": "a", "intervals": [[0]]}]})")), Error);
    CHECK_THROWS_AS(windows_from_json(Json::parse(R"({"nothing": 1})")), Error);
}

TEST_CASE("profile and estimate JSON round trip") {
    const DemandProfile p = default_profile();
    const DemandProfile q = profile_from_json(to_json(p));
    CHECK(q.hourly_rate == p.hourly_rate);
    CHECK(q.jump_mean == p.jump_mean);
    CHECK(q.jump_sd == p.jump_sd);
    CHECK(q.horizon_days == p.horizon_days);
    CHECK(q.start == p.start);

    DemandEstimate e{Eigen::VectorXd::LinSpaced(24, 0.1, 2.4), Eigen::VectorXd::Constant(24, 0.3), 7};
    const DemandEstimate f = estimate_from_json(to_json(e));
    CHECK(f.hourly_mean == e.hourly_mean);
    CHECK(f.hourly_var == e.hourly_var);
    CHECK(f.community_size == 7);
}

TEST_CASE("result JSON carries the documented fields") {
    ReconstructionResult r;
    r.process.P = Eigen::Vector2d(0.25, 0.75);
    r.process.D = Eigen::Matrix2d::Identity();
    r.objective = 1e-20;
    r.objective_trace = {1.0, 0.5};
    r.iterations = 2;
    r.converged = true;
    const Json j = to_json(r);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"P", "D", "objective", "objective_trace", "iterations", "converged"});
    CHECK(j["D"][1][1] == 1.0);
}

TEST_CASE("error metric helpers") {
    CHECK(correct_digits(1e-7) == doctest::Approx(7.0));
    CHECK(correct_digits(0.0) == 300.0);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(1, 5), b(1, 5);
    b << 1, 2, 3, 4, 5;
    CHECK(median_abs_error(a, b) == 3.0);
    CHECK(std::string(to_string(Solver::NelderMead)) == "nelder-mead");
    CHECK(solver_from_string("cd") == Solver::CoordinateDescent);
    CHECK_THROWS_AS(solver_from_string("slsqp"), Error);
}

TEST_CASE("benchmark cells are reproducible and canonical") {
    BenchmarkConfig cfg;
    cfg.ranks = {1.4, 1.0};
    cfg.runs = 2;
    cfg.seed = 5;
    ::setenv("DRIFTWIN_THREADS", "3", 1);
    const auto a = run_benchmark(cfg);
    ::setenv("DRIFTWIN_THREADS", "1", 1);
    const auto b = run_benchmark(cfg);
    ::unsetenv("DRIFTWIN_THREADS");
    REQUIRE(a.size() == 8);
    CHECK(a.front().rank == 1.0);
    CHECK(a[0].solver == Solver::CoordinateDescent);
    CHECK(a[1].solver == Solver::NelderMead);
    CHECK(a[0].instance_seed == a[1].instance_seed);
    std::ostringstream ra, rb, sa, sb;
    write_runs_csv(ra, a);
    write_runs_csv(rb, b);
    write_summary_csv(sa, summarize(a));
    write_summary_csv(sb, summarize(b));
    CHECK(ra.str() == rb.str());
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().rfind("rank,solver,runs,d_digits_mean,d_digits_sd,p_digits_mean,p_digits_sd,"
                         "objective_digits_mean,objective_digits_sd\n1,cd,2,", 0) == 0);
    for (const auto& r : a) {
        CHECK(r.trace_monotone);
        CHECK(r.atoms_per_window == doctest::Approx(1.0 / r.windows_per_atom));
        CHECK(std::abs(r.windows_per_atom - r.rank) <= 0.05 * r.rank + 1e-12);
    }
}

TEST_CASE("benchmark instances follow the rank target") {
    BenchmarkConfig cfg;
    for (std::size_t ri = 0; ri < cfg.ranks.size(); ++ri) {
        const Instance inst = benchmark_instance(cfg, ri, 0);
        CHECK(std::abs(inst.windows_per_atom - cfg.ranks[ri]) <= 0.05 * cfg.ranks[ri]);
        CHECK(inst.atomization.atoms.size() <= 32);
        CHECK(inst.obs.R.cols() == 5);
        const Instance again = benchmark_instance(cfg, ri, 0);
        CHECK(again.obs.R == inst.obs.R);
    }
}

TEST_CASE("parallel_for covers every index and rethrows") {
    ::setenv("DRIFTWIN_THREADS", "4", 1);
    CHECK(worker_count() == 4);
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t k) { hits[k] += 1; });
    CHECK(std::count(hits.begin(), hits.end(), 1) == 1000);
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t k) {
                        if (k == 7) throw Error(ErrorCode::InvalidInput, "boom");
                    }),
                    Error);
    ::setenv("DRIFTWIN_THREADS", "zero", 1);
    CHECK(worker_count() >= 1);
    ::unsetenv("DRIFTWIN_THREADS");
}
