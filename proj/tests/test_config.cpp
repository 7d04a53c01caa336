#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>

#include "retractlab/config.hpp"

using namespace retractlab;

namespace {

ExperimentConfig parse_and_validate(const std::string& text) {
    auto cfg = parse_config(text);
    validate_config(cfg);
    return cfg;
}

}  // namespace

TEST_CASE("parsing key value lines") {
    const std::string text =
        "# a comment line\n"
        "experiment = check-smallness   # trailing comment\n"
        "\n"
        "seed = 42\n"
        "space.blocks = 4\n"
        "schedule.radii = 1.0 0.5 0.25\n"
        "sigma = 1 3\n";
    auto cfg = parse_config(text);
    CHECK(cfg.experiment == "check-smallness");
    CHECK(cfg.seed == 42);
    CHECK(cfg.space_blocks == 4);
    CHECK(cfg.schedule_radii == std::vector<double>{1.0, 0.5, 0.25});
    CHECK(cfg.sigma == std::vector<int>{1, 3});
    CHECK(cfg.workers == 1);
    CHECK(cfg.out == ".");
}

TEST_CASE("parse rejections") {
    CHECK_THROWS_AS((void)parse_config("seed = 1\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("experiment = build-compact\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("experiment = build-compact\nseed = 1\nseed = 2\n"),
                    ConfigError);
    CHECK_THROWS_AS((void)parse_config("experiment = build-compact\nseed = 1\nbogus = 3\n"),
                    ConfigError);
    CHECK_THROWS_AS((void)parse_config("experiment = build-compact\nseed = 1\njust words\n"),
                    ConfigError);
    CHECK_THROWS_AS((void)parse_config("experiment = build-compact\nseed = -1\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("experiment = build-compact\nseed = 1\nworkers = x\n"),
                    ConfigError);
    CHECK_THROWS_AS(
        (void)parse_config("experiment = build-compact\nseed = 1\nspace.ambient = l3\n"),
        ConfigError);
    CHECK_THROWS_AS(
        (void)parse_config("experiment = build-compact\nseed = 1\nepsilon = half\n"),
        ConfigError);
    CHECK_THROWS_AS((void)parse_config("experiment = build-compact\nseed = 1\n = 3\n"),
                    ConfigError);
}

TEST_CASE("validation ranges and resolved defaults") {
    auto cfg = parse_and_validate("experiment = build-compact\nseed = 1\nspace.blocks = 5\n");
    CHECK(cfg.schedule_depth == 5);
    CHECK(cfg.smallness_depth == 4);

    auto one = parse_and_validate("experiment = build-compact\nseed = 1\nspace.blocks = 1\n");
    CHECK(one.smallness_depth == 1);

    const std::string base = "experiment = build-compact\nseed = 1\n";
    CHECK_THROWS_AS((void)parse_and_validate("experiment = flyby\nseed = 1\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_and_validate(base + "workers = 0\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_and_validate(base + "space.blocks = 0\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_and_validate(base + "schedule.kind = odd\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_and_validate(base + "schedule.depth = 0\n"), ConfigError);
    CHECK_THROWS_AS(
        (void)parse_and_validate(base + "schedule.kind = fordelta\nschedule.delta = 0\n"),
        ConfigError);
    CHECK_THROWS_AS(
        (void)parse_and_validate(base + "schedule.kind = geometric\nschedule.ratio = 1\n"),
        ConfigError);
    CHECK_THROWS_AS(
        (void)parse_and_validate(base + "schedule.kind = small\nschedule.epsilon = 0\n"),
        ConfigError);
    CHECK_THROWS_AS((void)parse_and_validate(base + "schedule.kind = radii\n"), ConfigError);
    CHECK_THROWS_AS(
        (void)parse_and_validate(base + "schedule.kind = radii\nschedule.radii = 1 0\n"),
        ConfigError);
    CHECK_THROWS_AS((void)parse_and_validate(base + "budget.pairs = 0\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_and_validate(base + "map = projection\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_and_validate(base + "epsilon = 1.5\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_and_validate(base + "epsilon = 0\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_and_validate(base + "sigma = 0 1\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_and_validate(base + "sigma = 2 2\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_and_validate(base + "stages = 0\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_and_validate(base + "pi.lip = -1\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_and_validate(base + "pi.box_samples = 0\n"), ConfigError);

    // epsilon = 1 is allowed, model.eps = 1 is not (for the audit experiment)
    CHECK_NOTHROW((void)parse_and_validate(base + "epsilon = 1\n"));
    CHECK_NOTHROW((void)parse_and_validate(base + "model.eps = 1\n"));
    CHECK_THROWS_AS((void)parse_and_validate(
                        "experiment = counterexample-audit\nseed = 1\nmodel.eps = 1\n"),
                    ConfigError);
    CHECK_THROWS_AS((void)parse_and_validate(
                        "experiment = counterexample-audit\nseed = 1\naudit.fdd = 0.5\n"),
                    ConfigError);
}

TEST_CASE("empty lists are allowed") {
    auto cfg = parse_and_validate(
        "experiment = pi-certificate\nseed = 1\nsigma =\nstages =\n");
    CHECK(cfg.sigma.empty());
    CHECK(cfg.stages.empty());
}

TEST_CASE("canonical text is order independent") {
    auto a = parse_and_validate(
        "experiment = estimate-lipschitz\nseed = 9\nworkers = 3\nepsilon = 0.25\n");
    auto b = parse_and_validate(
        "epsilon = 0.25\nworkers = 3\nseed = 9\nexperiment = estimate-lipschitz\n");
    CHECK(a.canonical_text() == b.canonical_text());
    CHECK(a.hash() == b.hash());

    // every configured value appears in the canonical rendering
    auto text = a.canonical_text();
    CHECK(text.find("schema 1") == 0);
    CHECK(text.find("experiment = estimate-lipschitz") != std::string::npos);
    CHECK(text.find("seed = 9") != std::string::npos);
    CHECK(text.find("workers = 3") != std::string::npos);
}

TEST_CASE("the hash ignores the output directory") {
    auto a = parse_and_validate("experiment = build-compact\nseed = 1\nout = runs/a\n");
    auto b = parse_and_validate("experiment = build-compact\nseed = 1\nout = runs/b\n");
    CHECK(a.out != b.out);
    CHECK(a.canonical_text() == b.canonical_text());
    CHECK(a.hash() == b.hash());

    auto c = parse_and_validate("experiment = build-compact\nseed = 2\nout = runs/a\n");
    CHECK(a.hash() != c.hash());

    auto d = parse_and_validate("experiment = build-compact\nseed = 1\nsigma = 2 4\n");
    CHECK(a.hash() != d.hash());
}

TEST_CASE("the schema documents every kind") {
    auto text = config_schema_text();
    for (const auto& kind : experiment_kinds())
        CHECK(text.find(kind) != std::string::npos);
    CHECK(text.find("seed") != std::string::npos);
    CHECK(text.find("schedule.kind") != std::string::npos);
    CHECK(text.find("excluded from the config hash") != std::string::npos);
    CHECK(experiment_kinds().size() == 7);
}
