#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "driftwin/io.hpp"

namespace fs = std::filesystem;
using driftwin::Json;
using driftwin::read_text_file;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(DRIFTWIN_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("driftwin_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("atomize matches the golden files") {
    const fs::path out = scratch("atomize");
    const fs::path golden = fs::path(GOLDEN_DIR) / "two_windows";
    REQUIRE(run("atomize " + q(golden / "windows.json") + " -o " + q(out)) == 0);
    CHECK(read_text_file(out / "atoms.json") == read_text_file(golden / "atoms.json"));
    CHECK(read_text_file(out / "incidence.csv") == read_text_file(golden / "incidence.csv"));
}

TEST_CASE("validation failures exit with 2") {
    const fs::path dir = scratch("invalid");
    driftwin::write_text_file(dir / "bad.json", "{\"windows\": [");
    CHECK(run("atomize " + q(dir / "bad.json") + " -o " + q(dir)) == 2);
    driftwin::write_text_file(dir / "empty.json", "{\"windows\": [{\"id\": \"z\", \"intervals\": [[1, 1]]}]}");
    CHECK(run("atomize " + q(dir / "empty.json") + " -o " + q(dir)) == 2);
    CHECK(run("reconstruct --incidence " + q(dir / "none.csv") + " --observations " + q(dir / "none.csv")) == 2);
    CHECK(run("reconstruct --solver slsqp --incidence a --observations b") == 2);
    CHECK(run("benchmark --ranks 1.0,x --out-dir " + q(dir)) == 2);
    CHECK(run("frobnicate") == 2);
}

TEST_CASE("benchmark fixtures reconstruct and the table is reproducible") {
    const fs::path dir = scratch("bench");
    const std::string common = "benchmark --ranks 2.0 --runs 1 --seed 3 --min-identifiability 1e-6 ";
    REQUIRE(run(common + "--out-dir " + q(dir / "a") + " --emit-fixtures " + q(dir / "fx")) == 0);
    REQUIRE(run(common + "--out-dir " + q(dir / "b")) == 0);
    CHECK(read_text_file(dir / "a" / "table.csv") == read_text_file(dir / "b" / "table.csv"));
    CHECK(read_text_file(dir / "a" / "runs.csv") == read_text_file(dir / "b" / "runs.csv"));

    const Json manifest = Json::parse(read_text_file(dir / "a" / "manifest.json"));
    CHECK(manifest["command"] == "benchmark");
    CHECK(manifest["config"]["absent_solvers"].size() == 2);
    CHECK(manifest["outputs"].size() == 3);

    const fs::path fx = dir / "fx" / "rank2_run0";
    const std::string inputs = "--incidence " + q(fx / "incidence.csv") + " --observations " + q(fx / "observations.csv");
    REQUIRE(run("reconstruct " + inputs + " -o " + q(dir / "cd.json")) == 0);
    const Json cd = Json::parse(read_text_file(dir / "cd.json"));
    CHECK(cd["converged"] == true);
    CHECK(cd["objective"].get<double>() <= 1e-12);

    const int nm_exit = run("reconstruct " + inputs + " --solver nelder-mead -o " + q(dir / "nm.json"));
    CHECK((nm_exit == 0 || nm_exit == 3));
    const Json nm = Json::parse(read_text_file(dir / "nm.json"));
    CHECK(nm["objective"].get<double>() >= cd["objective"].get<double>());

    CHECK(run("reconstruct " + inputs + " --max-iter 2 -o " + q(dir / "short.json")) == 3);
    CHECK(run("reconstruct " + inputs + " --variant direct -o " + q(dir / "direct.json")) == 0);
}

TEST_CASE("water pipeline smoke run") {
    const fs::path dir = scratch("water");
    const auto t0 = std::chrono::steady_clock::now();
    REQUIRE(run("water simulate --households 200 --seed 1 -o " + q(dir / "meters.csv") + " --truth " +
                q(dir / "truth.csv")) == 0);
    REQUIRE(run("water fit --meters " + q(dir / "meters.csv") + " -o " + q(dir / "estimate.json")) == 0);
    REQUIRE(run("water predict --estimate " + q(dir / "estimate.json") + " --households 1000 -o " +
                q(dir / "curves.csv")) == 0);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 60.0);
    const std::string curves = read_text_file(dir / "curves.csv");
    CHECK(curves.rfind("hour,mean,quantile\n", 0) == 0);
    CHECK(std::count(curves.begin(), curves.end(), '\n') == 25);
    CHECK(read_text_file(dir / "meters.csv").rfind("household_id,timestamp_iso8601,cumulative_liters\n", 0) == 0);

    REQUIRE(run("water simulate --profile " + q(fs::path(PROFILE_DIR) / "default.json") + " --households 3 -o " +
                q(dir / "again.csv")) == 0);
    CHECK(run("water predict --estimate " + q(dir / "estimate.json") + " --quantile 1.5 -o " + q(dir / "x.csv")) == 2);
    CHECK(run("water fit --meters " + q(dir / "missing.csv")) == 2);
}

TEST_CASE("12000-household water configuration is accepted") {
    const fs::path dir = scratch("water_full");
    CHECK(run("water simulate --households 12000 --days 28 --reports-per-day 4 -o " + q(dir / "meters.csv")) == 0);
    CHECK(fs::file_size(dir / "meters.csv") > 0);
}
