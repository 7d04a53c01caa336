#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "retractlab/config.hpp"
#include "retractlab/counterexample.hpp"
#include "retractlab/experiments.hpp"

using namespace retractlab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("retractlab_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// drops lines whose first token names a run-shape detail (worker count,
// config hash) so the remaining bytes must agree exactly
std::string strip_shape_lines(const std::string& text) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("workers ", 0) != 0 && line.rfind("config_hash ", 0) != 0)
            out << line << "\n";
    return out.str();
}

ExperimentConfig make(const std::string& text) {
    auto cfg = parse_config(text);
    validate_config(cfg);
    return cfg;
}

std::vector<std::string> artifact_names(const RunResult& r) {
    std::vector<std::string> names;
    for (const auto& a : r.artifacts) names.push_back(fs::path(a).filename().string());
    return names;
}

const std::string kSeparatedLadder =
    "schedule.kind = radii\n"
    "schedule.radii = 1 0.005 1e-6 5e-7 2.5e-7 1.25e-7 6.25e-8 3.125e-8 1.5625e-8\n"
    "space.blocks = 9\n"
    "space.block_dim = 1\n"
    "space.block_norm = linf\n"
    "space.ambient = linf\n"
    "sigma = 2\n"
    "stages = 1\n"
    "epsilon = 1\n"
    "pi.lip = 1\n"
    "pi.box_samples = 300\n"
    "pi.smoothing_samples = 16\n";

}  // namespace

TEST_CASE("build-compact writes a passing report") {
    auto dir = fresh_dir("build");
    auto cfg = make("experiment = build-compact\nseed = 3\nspace.blocks = 3\n"
                    "budget.samples = 48\nout = " + dir.string() + "\n");
    auto res = run_experiment(cfg);
    CHECK(res.exit_code == 0);
    CHECK(artifact_names(res) == std::vector<std::string>{"report.txt", "series.csv"});
    auto report = slurp(dir / "report.txt");
    CHECK(report.rfind("retractlab-report v1\n", 0) == 0);
    CHECK(report.find("experiment build-compact") != std::string::npos);
    CHECK(report.find("verdict PASS") != std::string::npos);
    auto csv = slurp(dir / "series.csv");
    CHECK(csv.find("n,r,A,") != std::string::npos);
}

TEST_CASE("estimate-lipschitz on the identity map") {
    auto dir = fresh_dir("lip_id");
    auto cfg = make("experiment = estimate-lipschitz\nseed = 5\nmap = identity\n"
                    "space.blocks = 4\nbudget.pairs = 400\nout = " + dir.string() + "\n");
    auto res = run_experiment(cfg);
    CHECK(res.exit_code == 0);
    auto report = slurp(dir / "report.txt");
    CHECK(report.find("map identity") != std::string::npos);
    CHECK(report.find("bound 1\n") != std::string::npos);
    CHECK(report.find("verdict PASS") != std::string::npos);
}

TEST_CASE("estimate-lipschitz over the peeling ladder") {
    auto dir = fresh_dir("lip_ret");
    auto cfg = make("experiment = estimate-lipschitz\nseed = 5\n"
                    "schedule.kind = fordelta\nschedule.delta = 0.5\n"
                    "space.blocks = 3\nbudget.pairs = 1500\nout = " + dir.string() + "\n");
    auto res = run_experiment(cfg);
    CHECK(res.exit_code == 0);
    auto csv = slurp(dir / "series.csv");
    // one ladder row per depth
    CHECK(csv.find("depth,estimate,bound") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("check-smallness passes on a tuned ladder and fails on the default") {
    auto good = fresh_dir("small_good");
    auto cfg = make("experiment = check-smallness\nseed = 2\n"
                    "schedule.kind = small\nschedule.epsilon = 0.5\nepsilon = 0.5\n"
                    "space.blocks = 4\nout = " + good.string() + "\n");
    auto res = run_experiment(cfg);
    CHECK(res.exit_code == 0);
    CHECK(slurp(good / "report.txt").find("verdict PASS") != std::string::npos);

    auto bad = fresh_dir("small_bad");
    auto fails = make("experiment = check-smallness\nseed = 2\nepsilon = 0.5\n"
                      "space.blocks = 4\nsmallness.depth = 3\nout = " + bad.string() + "\n");
    auto res2 = run_experiment(fails);
    CHECK(res2.exit_code == 1);
    auto report = slurp(bad / "report.txt");
    CHECK(report.find("verdict FAIL") != std::string::npos);
    CHECK(slurp(bad / "series.csv").find("n,sigma,") != std::string::npos);
    CHECK(res2.summary.find("FAIL") != std::string::npos);
}

TEST_CASE("nearest-point in the euclidean setting") {
    auto dir = fresh_dir("near_euclid");
    auto cfg = make("experiment = nearest-point\nseed = 7\n"
                    "space.blocks = 2\nspace.block_dim = 2\n"
                    "space.block_norm = l2\nspace.ambient = l2\n"
                    "budget.queries = 8\nbudget.pairs = 300\nout = " + dir.string() + "\n");
    auto res = run_experiment(cfg);
    CHECK(res.exit_code == 0);
    CHECK(artifact_names(res) ==
          std::vector<std::string>{"report.txt", "omega.csv", "series.csv"});
    auto report = slurp(dir / "report.txt");
    CHECK(report.find("solver frank-wolfe") != std::string::npos);
    CHECK(report.find("induced_lipschitz") != std::string::npos);
    CHECK(slurp(dir / "omega.csv").find("scale,omega") != std::string::npos);
}

TEST_CASE("nearest-point in a general norm is diagnostic") {
    auto dir = fresh_dir("near_general");
    auto cfg = make("experiment = nearest-point\nseed = 7\n"
                    "space.blocks = 2\nspace.block_dim = 2\n"
                    "budget.queries = 3\nout = " + dir.string() + "\n");
    auto res = run_experiment(cfg);
    CHECK(res.exit_code == 0);
    CHECK(artifact_names(res) == std::vector<std::string>{"report.txt", "series.csv"});
    auto report = slurp(dir / "report.txt");
    CHECK(report.find("solver subgradient") != std::string::npos);
    CHECK(report.find("no bound is asserted") != std::string::npos);
    CHECK(report.find("induced_lipschitz") == std::string::npos);
}

TEST_CASE("extract-projection on a strongly separated ladder") {
    auto dir = fresh_dir("proj");
    auto cfg = make("experiment = extract-projection\nseed = 3\n" + kSeparatedLadder +
                    "out = " + dir.string() + "\n");
    auto res = run_experiment(cfg);
    CHECK(res.exit_code == 0);
    CHECK(artifact_names(res) ==
          std::vector<std::string>{"report.txt", "matrix.csv", "trend.csv"});
    auto report = slurp(dir / "report.txt");
    CHECK(report.find("lip_reference 1 configured") != std::string::npos);
    CHECK(report.find("norm_estimate") != std::string::npos);
    CHECK(report.find("verdict PASS") != std::string::npos);
    CHECK(slurp(dir / "matrix.csv").find("# base_count") != std::string::npos);
}

TEST_CASE("pi-certificate runs and is worker invariant") {
    auto dir1 = fresh_dir("pi_w1");
    auto cfg1 = make("experiment = pi-certificate\nseed = 3\n" + kSeparatedLadder +
                     "out = " + dir1.string() + "\n");
    auto res1 = run_experiment(cfg1);
    CHECK(res1.exit_code == 0);
    CHECK(artifact_names(res1) ==
          std::vector<std::string>{"report.txt", "series.csv", "trend.csv"});
    auto report1 = slurp(dir1 / "report.txt");
    CHECK(report1.find("verdict PASS") != std::string::npos);

    auto dir2 = fresh_dir("pi_w2");
    auto cfg2 = make("experiment = pi-certificate\nseed = 3\nworkers = 2\n" + kSeparatedLadder +
                     "out = " + dir2.string() + "\n");
    auto res2 = run_experiment(cfg2);
    CHECK(res2.exit_code == 0);
    CHECK(strip_shape_lines(slurp(dir2 / "report.txt")) == strip_shape_lines(report1));
    CHECK(slurp(dir2 / "series.csv") == slurp(dir1 / "series.csv"));
    CHECK(slurp(dir2 / "trend.csv") == slurp(dir1 / "trend.csv"));
}

TEST_CASE("counterexample-audit writes the model alongside its rows") {
    auto dir = fresh_dir("audit");
    auto cfg = make("experiment = counterexample-audit\nseed = 11\n"
                    "model.count = 2\nmodel.eps = 0.5\naudit.pairs = 120\n"
                    "audit.fix_samples = 24\naudit.range_samples = 8\n"
                    "out = " + dir.string() + "\n");
    auto res = run_experiment(cfg);
    CHECK(res.exit_code == 0);
    CHECK(artifact_names(res) ==
          std::vector<std::string>{"report.txt", "series.csv", "model.txt"});
    auto report = slurp(dir / "report.txt");
    CHECK(report.find("candidate gauge-radial") != std::string::npos);
    CHECK(report.find("audit v1") != std::string::npos);
    CHECK(res.summary.find("blocks show blow-up evidence") != std::string::npos);
    // the shipped model round trips
    CHECK(AssembledModel::from_text(slurp(dir / "model.txt")).count() == 2);
}

TEST_CASE("pipeline failures still write a report") {
    auto dir = fresh_dir("pipe_fail");
    // sigma covers stage 1 only, stage 2 is requested
    auto cfg = make("experiment = pi-certificate\nseed = 3\nsigma = 2\nstages = 1 2\n"
                    "space.blocks = 4\npi.lip = 1\nout = " + dir.string() + "\n");
    auto res = run_experiment(cfg);
    CHECK(res.exit_code == 1);
    CHECK(artifact_names(res) == std::vector<std::string>{"report.txt"});
    auto report = slurp(dir / "report.txt");
    CHECK(report.find("error ") != std::string::npos);
    CHECK(report.find("verdict FAIL") != std::string::npos);
    CHECK(res.summary.find("pipeline failure") != std::string::npos);
}

TEST_CASE("identical configurations reproduce byte identical artifacts") {
    auto dir1 = fresh_dir("repro1");
    auto dir2 = fresh_dir("repro2");
    const std::string base = "experiment = check-smallness\nseed = 13\n"
                             "schedule.kind = small\nspace.blocks = 3\n";
    (void)run_experiment(make(base + "out = " + dir1.string() + "\n"));
    (void)run_experiment(make(base + "out = " + dir2.string() + "\n"));
    CHECK(slurp(dir1 / "report.txt") == slurp(dir2 / "report.txt"));
    CHECK(slurp(dir1 / "series.csv") == slurp(dir2 / "series.csv"));
}

TEST_CASE("describe resolves the plan without side effects") {
    auto ghost = fs::temp_directory_path() / "retractlab_test_ghost";
    fs::remove_all(ghost);

    auto cfg = make("experiment = pi-certificate\nseed = 3\n" + kSeparatedLadder +
                    "out = " + ghost.string() + "\n");
    auto plan = describe_experiment(cfg);
    CHECK(plan.rfind("retractlab-plan v1\n", 0) == 0);
    CHECK(plan.find("experiment pi-certificate") != std::string::npos);
    CHECK(plan.find("stage n 1 sigma 2 phi 9") != std::string::npos);
    CHECK(plan.find(" tau ") != std::string::npos);
    CHECK(!fs::exists(ghost));

    auto small = make("experiment = check-smallness\nseed = 1\nspace.blocks = 4\n");
    auto splan = describe_experiment(small);
    CHECK(splan.find("row n 1 sigma 1 bound") != std::string::npos);

    auto audit = make("experiment = counterexample-audit\nseed = 1\n");
    auto aplan = describe_experiment(audit);
    CHECK(aplan.find("candidate gauge-radial") != std::string::npos);
    CHECK(aplan.find("model count 2") != std::string::npos);

    // a stage the selection cannot cover is reported as a diagnostic line
    auto bad = make("experiment = pi-certificate\nseed = 3\nsigma = 2\nstages = 1 2\n"
                    "space.blocks = 4\npi.lip = 1\n");
    auto bplan = describe_experiment(bad);
    CHECK(bplan.find("diagnostic: ") != std::string::npos);
}
