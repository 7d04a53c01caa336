#include "retractlab/config.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

namespace retractlab {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& what) { throw ConfigError("config: " + what); }

double parse_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        fail(key + " expects a number, got '" + value + "'");
    }
    if (used != value.size()) fail(key + " expects a number, got '" + value + "'");
    return v;
}

long long parse_int(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(value, &used);
    } catch (const std::exception&) {
        fail(key + " expects an integer, got '" + value + "'");
    }
    if (used != value.size()) fail(key + " expects an integer, got '" + value + "'");
    return v;
}

std::uint64_t parse_seed(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(value, &used);
    } catch (const std::exception&) {
        fail(key + " expects a nonnegative integer, got '" + value + "'");
    }
    if (used != value.size() || value.find('-') != std::string::npos)
        fail(key + " expects a nonnegative integer, got '" + value + "'");
    return v;
}

std::vector<double> parse_doubles(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    std::vector<double> out;
    std::string token;
    while (in >> token) out.push_back(parse_double(key, token));
    return out;
}

std::vector<int> parse_ints(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    std::vector<int> out;
    std::string token;
    while (in >> token) out.push_back(static_cast<int>(parse_int(key, token)));
    return out;
}

PNorm parse_norm(const std::string& key, const std::string& value) {
    if (value == "l1") return PNorm::One;
    if (value == "l2") return PNorm::Two;
    if (value == "linf") return PNorm::Inf;
    fail(key + " expects l1, l2 or linf, got '" + value + "'");
}

const char* norm_key(PNorm p) {
    switch (p) {
        case PNorm::One: return "l1";
        case PNorm::Two: return "l2";
        default: return "linf";
    }
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds{
        "build-compact",   "estimate-lipschitz", "check-smallness",     "nearest-point",
        "extract-projection", "pi-certificate",  "counterexample-audit"};
    return kinds;
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    bool have_experiment = false, have_seed = false;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail("line " + std::to_string(lineno) + " is not a key = value pair");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail("line " + std::to_string(lineno) + " has an empty key");
        if (!seen.insert(key).second) fail("duplicate key '" + key + "'");

        if (key == "experiment") {
            cfg.experiment = value;
            have_experiment = true;
        } else if (key == "seed") {
            cfg.seed = parse_seed(key, value);
            have_seed = true;
        } else if (key == "workers") {
            cfg.workers = static_cast<int>(parse_int(key, value));
        } else if (key == "out") {
            cfg.out = value;
        } else if (key == "space.blocks") {
            cfg.space_blocks = static_cast<int>(parse_int(key, value));
        } else if (key == "space.block_dim") {
            cfg.space_block_dim = static_cast<int>(parse_int(key, value));
        } else if (key == "space.block_norm") {
            cfg.space_block_norm = parse_norm(key, value);
        } else if (key == "space.ambient") {
            cfg.space_ambient = parse_norm(key, value);
        } else if (key == "schedule.kind") {
            cfg.schedule_kind = value;
        } else if (key == "schedule.depth") {
            cfg.schedule_depth = static_cast<int>(parse_int(key, value));
        } else if (key == "schedule.delta") {
            cfg.schedule_delta = parse_double(key, value);
        } else if (key == "schedule.ratio") {
            cfg.schedule_ratio = parse_double(key, value);
        } else if (key == "schedule.epsilon") {
            cfg.schedule_epsilon = parse_double(key, value);
        } else if (key == "schedule.radii") {
            cfg.schedule_radii = parse_doubles(key, value);
        } else if (key == "budget.pairs") {
            cfg.budget_pairs = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "budget.samples") {
            cfg.budget_samples = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "budget.queries") {
            cfg.budget_queries = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "map") {
            cfg.map_kind = value;
        } else if (key == "epsilon") {
            cfg.epsilon = parse_double(key, value);
        } else if (key == "sigma") {
            cfg.sigma = parse_ints(key, value);
        } else if (key == "stages") {
            cfg.stages = parse_ints(key, value);
        } else if (key == "smallness.depth") {
            cfg.smallness_depth = static_cast<int>(parse_int(key, value));
        } else if (key == "pi.lip") {
            cfg.pi_lip = parse_double(key, value);
        } else if (key == "pi.phi_override") {
            cfg.pi_phi_override = parse_int(key, value);
        } else if (key == "pi.box_samples") {
            cfg.pi_box_samples = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "pi.smoothing_samples") {
            cfg.pi_smoothing_samples = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "model.count") {
            cfg.model_count = static_cast<int>(parse_int(key, value));
        } else if (key == "model.eps") {
            cfg.model_eps = parse_double(key, value);
        } else if (key == "audit.fdd") {
            cfg.audit_fdd = parse_double(key, value);
        } else if (key == "audit.pairs") {
            cfg.audit_pairs = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "audit.fix_samples") {
            cfg.audit_fix = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "audit.range_samples") {
            cfg.audit_range = static_cast<std::size_t>(parse_int(key, value));
        } else {
            fail("unknown key '" + key + "'");
        }
    }
    if (!have_experiment) fail("missing mandatory key 'experiment'");
    if (!have_seed) fail("missing mandatory key 'seed'");
    return cfg;
}

void validate_config(ExperimentConfig& cfg) {
    const auto& kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), cfg.experiment) == kinds.end()) {
        std::string all;
        for (const auto& k : kinds) all += (all.empty() ? "" : ", ") + k;
        fail("unknown experiment '" + cfg.experiment + "' (expected one of " + all + ")");
    }
    if (cfg.workers < 1) fail("workers must be at least 1");
    if (cfg.space_blocks < 1) fail("space.blocks must be at least 1");
    if (cfg.space_block_dim < 1) fail("space.block_dim must be at least 1");

    if (cfg.schedule_kind != "default" && cfg.schedule_kind != "fordelta" &&
        cfg.schedule_kind != "geometric" && cfg.schedule_kind != "small" &&
        cfg.schedule_kind != "radii")
        fail("schedule.kind must be default, fordelta, geometric, small or radii");
    if (cfg.schedule_depth == -1) cfg.schedule_depth = cfg.space_blocks;
    if (cfg.schedule_depth < 1) fail("schedule.depth must be at least 1");
    if (cfg.schedule_kind == "fordelta" && !(cfg.schedule_delta > 0.0))
        fail("schedule.delta must be positive");
    if (cfg.schedule_kind == "geometric" &&
        !(cfg.schedule_ratio > 0.0 && cfg.schedule_ratio < 1.0))
        fail("schedule.ratio must lie in (0, 1)");
    if (cfg.schedule_kind == "small" &&
        !(cfg.schedule_epsilon > 0.0 && cfg.schedule_epsilon <= 1.0))
        fail("schedule.epsilon must lie in (0, 1]");
    if (cfg.schedule_kind == "radii") {
        if (cfg.schedule_radii.empty()) fail("schedule.kind radii needs schedule.radii");
        for (double r : cfg.schedule_radii)
            if (!(r > 0.0)) fail("schedule.radii must be positive");
    }

    if (cfg.budget_pairs == 0) fail("budget.pairs must be positive");
    if (cfg.budget_samples == 0) fail("budget.samples must be positive");
    if (cfg.budget_queries == 0) fail("budget.queries must be positive");
    if (cfg.map_kind != "retraction" && cfg.map_kind != "identity")
        fail("map must be retraction or identity");

    if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0)) fail("epsilon must lie in (0, 1]");
    for (std::size_t i = 0; i < cfg.sigma.size(); ++i) {
        if (cfg.sigma[i] < 1) fail("sigma entries must be at least 1");
        if (i > 0 && cfg.sigma[i] <= cfg.sigma[i - 1]) fail("sigma must be strictly increasing");
    }
    for (int s : cfg.stages)
        if (s < 1) fail("stages entries must be at least 1");
    if (cfg.smallness_depth == -1) cfg.smallness_depth = std::max(1, cfg.space_blocks - 1);
    if (cfg.smallness_depth < 1) fail("smallness.depth must be at least 1");

    if (cfg.pi_lip < 0.0) fail("pi.lip must be nonnegative (0 estimates it)");
    if (cfg.pi_box_samples == 0) fail("pi.box_samples must be positive");
    if (cfg.pi_smoothing_samples == 0) fail("pi.smoothing_samples must be positive");

    if (cfg.experiment == "counterexample-audit") {
        if (cfg.model_count < 1) fail("model.count must be at least 1");
        if (!(cfg.model_eps > 0.0 && cfg.model_eps < 1.0)) fail("model.eps must lie in (0, 1)");
        if (cfg.audit_fdd < 1.0) fail("audit.fdd must be at least 1");
        if (cfg.audit_pairs == 0 || cfg.audit_fix == 0 || cfg.audit_range == 0)
            fail("audit budgets must be positive");
    }
}

std::string ExperimentConfig::canonical_text() const {
    std::ostringstream os;
    os << "schema 1\n";
    os << "experiment = " << experiment << "\n";
    os << "seed = " << seed << "\n";
    os << "workers = " << workers << "\n";
    os << "space.blocks = " << space_blocks << "\n";
    os << "space.block_dim = " << space_block_dim << "\n";
    os << "space.block_norm = " << norm_key(space_block_norm) << "\n";
    os << "space.ambient = " << norm_key(space_ambient) << "\n";
    os << "schedule.kind = " << schedule_kind << "\n";
    os << "schedule.depth = " << schedule_depth << "\n";
    os << "schedule.delta = " << fmt(schedule_delta) << "\n";
    os << "schedule.ratio = " << fmt(schedule_ratio) << "\n";
    os << "schedule.epsilon = " << fmt(schedule_epsilon) << "\n";
    os << "schedule.radii =";
    for (double r : schedule_radii) os << " " << fmt(r);
    os << "\n";
    os << "budget.pairs = " << budget_pairs << "\n";
    os << "budget.samples = " << budget_samples << "\n";
    os << "budget.queries = " << budget_queries << "\n";
    os << "map = " << map_kind << "\n";
    os << "epsilon = " << fmt(epsilon) << "\n";
    os << "sigma =";
    for (int s : sigma) os << " " << s;
    os << "\n";
    os << "stages =";
    for (int s : stages) os << " " << s;
    os << "\n";
    os << "smallness.depth = " << smallness_depth << "\n";
    os << "pi.lip = " << fmt(pi_lip) << "\n";
    os << "pi.phi_override = " << pi_phi_override << "\n";
    os << "pi.box_samples = " << pi_box_samples << "\n";
    os << "pi.smoothing_samples = " << pi_smoothing_samples << "\n";
    os << "model.count = " << model_count << "\n";
    os << "model.eps = " << fmt(model_eps) << "\n";
    os << "audit.fdd = " << fmt(audit_fdd) << "\n";
    os << "audit.pairs = " << audit_pairs << "\n";
    os << "audit.fix_samples = " << audit_fix << "\n";
    os << "audit.range_samples = " << audit_range << "\n";
    return os.str();
}

std::uint64_t ExperimentConfig::hash() const {
    const std::string text = canonical_text();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string config_schema_text() {
    return
        "key = value lines; '#' starts a comment; lists are space-separated\n"
        "experiment (mandatory): build-compact | estimate-lipschitz | check-smallness |\n"
        "    nearest-point | extract-projection | pi-certificate | counterexample-audit\n"
        "seed (mandatory): nonnegative integer driving every sampler\n"
        "workers: parallel workers, default 1 (results are worker-invariant)\n"
        "out: artifact directory, default '.' (excluded from the config hash)\n"
        "space.blocks / space.block_dim: model layout, defaults 8 / 1\n"
        "space.block_norm / space.ambient: l1 | l2 | linf, defaults l1 / l1\n"
        "schedule.kind: default | fordelta | geometric | small | radii\n"
        "schedule.depth: ladder length, default space.blocks\n"
        "schedule.delta: total budget for kind fordelta, default 0.5\n"
        "schedule.ratio: shrink factor for kind geometric, default 0.5\n"
        "schedule.epsilon: smallness target for kind small, default 0.5\n"
        "schedule.radii: explicit ladder for kind radii\n"
        "budget.pairs / budget.samples / budget.queries: sampling budgets\n"
        "map: retraction | identity (estimate-lipschitz subject)\n"
        "epsilon: smallness / projection parameter in (0, 1], default 0.5\n"
        "sigma: strictly increasing dimension selection, empty = identity\n"
        "stages: stage indices for projection experiments, default 1\n"
        "smallness.depth: certificate rows, default space.blocks - 1\n"
        "pi.lip: Lipschitz reference, 0 = estimate empirically\n"
        "pi.phi_override: witness dimension override, -1 keeps the formula\n"
        "pi.box_samples / pi.smoothing_samples: pipeline budgets\n"
        "model.count / model.eps: assembled-model shape for the audit\n"
        "audit.fdd / audit.pairs / audit.fix_samples / audit.range_samples\n";
}

}  // namespace retractlab
