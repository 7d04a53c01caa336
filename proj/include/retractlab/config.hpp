#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "retractlab/block_space.hpp"

namespace retractlab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One experiment run, parsed from key = value lines ('#' starts a comment).
// Unknown or duplicate keys are schema violations, as are missing mandatory
// keys (experiment, seed) and out-of-range values. The documented schema
// lives in config_schema_text().
struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out = ".";

    int space_blocks = 8;
    int space_block_dim = 1;
    PNorm space_block_norm = PNorm::One;
    PNorm space_ambient = PNorm::One;

    std::string schedule_kind = "default";
    int schedule_depth = -1;  // resolved to space_blocks
    double schedule_delta = 0.5;
    double schedule_ratio = 0.5;
    double schedule_epsilon = 0.5;
    std::vector<double> schedule_radii;

    std::size_t budget_pairs = 20000;
    std::size_t budget_samples = 2048;
    std::size_t budget_queries = 100;

    std::string map_kind = "retraction";  // or "identity"
    double epsilon = 0.5;
    std::vector<int> sigma;    // empty keeps the identity selection
    std::vector<int> stages{1};
    int smallness_depth = -1;  // resolved to space_blocks - 1, at least 1

    double pi_lip = 0.0;  // 0 estimates the reference constant empirically
    long long pi_phi_override = -1;
    std::size_t pi_box_samples = 4000;
    std::size_t pi_smoothing_samples = 64;

    int model_count = 2;
    double model_eps = 0.5;
    double audit_fdd = 1.0;
    std::size_t audit_pairs = 500;
    std::size_t audit_fix = 64;
    std::size_t audit_range = 16;

    // resolved schema in fixed key order; the output directory is excluded so
    // relocating artifacts does not change the hash
    std::string canonical_text() const;
    std::uint64_t hash() const;  // FNV-1a over canonical_text()
};

const std::vector<std::string>& experiment_kinds();

ExperimentConfig parse_config(const std::string& text);

// resolves deferred defaults and applies per-experiment range checks;
// throws ConfigError on violation
void validate_config(ExperimentConfig& cfg);

std::string config_schema_text();

}  // namespace retractlab
