#pragma once

#include <string>
#include <vector>

#include "retractlab/config.hpp"

namespace retractlab {

struct RunResult {
    int exit_code = 0;  // 0 all asserted bounds pass, 1 pipeline failure
    std::vector<std::string> artifacts;
    std::string summary;
};

// Executes the configured pipeline and writes its artifacts (report.txt plus
// experiment-specific CSVs) under cfg.out. A pipeline failure still writes
// report.txt and returns exit code 1; config problems are the caller's to
// catch at validation time, before any artifact exists.
RunResult run_experiment(const ExperimentConfig& cfg);

// Resolved execution plan (depths, budgets, stage parameters) without
// side effects: nothing is written and no sampling runs.
std::string describe_experiment(const ExperimentConfig& cfg);

}  // namespace retractlab
