// Experiment runner. Reads a key=value config file, applies command line
// overrides, and either prints the resolved plan (--dry-run) or executes the
// experiment and writes its artifacts. Exit codes: 0 all asserted bounds
// hold, 1 a pipeline stage failed (the report is still written), 2 the
// config violates the schema (nothing is written).
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "retractlab/config.hpp"
#include "retractlab/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"retractlab: retractions, smallness certificates, projection extraction"};
    std::string config_path;
    app.add_option("--config", config_path, "path to a key=value experiment file");
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "override the seed from the config");
    std::string out;
    auto* out_opt = app.add_option("--out", out, "override the output directory");
    int workers = 1;
    auto* workers_opt = app.add_option("--workers", workers, "override the worker count");
    bool dry_run = false;
    app.add_flag("--dry-run", dry_run, "print the resolved plan and write nothing");
    bool schema = false;
    app.add_flag("--schema", schema, "print the config schema and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (schema) {
        std::cout << retractlab::config_schema_text();
        return 0;
    }
    if (config_path.empty()) {
        std::cerr << "config error: --config is required unless --schema is given\n";
        return 2;
    }

    retractlab::ExperimentConfig cfg;
    try {
        std::ifstream in(config_path);
        if (!in) throw retractlab::ConfigError("cannot open config file: " + config_path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        cfg = retractlab::parse_config(buffer.str());
        if (seed_opt->count() > 0) cfg.seed = seed;
        if (out_opt->count() > 0) cfg.out = out;
        if (workers_opt->count() > 0) cfg.workers = workers;
        retractlab::validate_config(cfg);
    } catch (const retractlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (dry_run) {
            std::cout << retractlab::describe_experiment(cfg);
            return 0;
        }
        retractlab::RunResult result = retractlab::run_experiment(cfg);
        std::cout << result.summary << "\n";
        for (const auto& path : result.artifacts) std::cout << "wrote " << path << "\n";
        return result.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
