#include "retractlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "retractlab/counterexample.hpp"
#include "retractlab/diamond.hpp"
#include "retractlab/linearize.hpp"
#include "retractlab/proximity.hpp"
#include "retractlab/report.hpp"
#include "retractlab/smallness.hpp"

namespace retractlab {

namespace {

struct Outcome {
    bool pass = false;
    std::string report;  // body appended to the preamble; ends with a verdict line
    std::vector<std::pair<std::string, std::string>> extra;  // file name, content
    std::string summary;
};

BlockSpace make_space(const ExperimentConfig& cfg) {
    return BlockSpace::uniform(cfg.space_blocks, cfg.space_block_dim, cfg.space_block_norm,
                               cfg.space_ambient);
}

RadiiSchedule make_schedule(const ExperimentConfig& cfg) {
    if (cfg.schedule_kind == "default") return default_schedule(cfg.schedule_depth);
    if (cfg.schedule_kind == "fordelta")
        return schedule_for_delta(cfg.schedule_delta, cfg.schedule_depth);
    if (cfg.schedule_kind == "geometric")
        return geometric_schedule(cfg.schedule_ratio, cfg.schedule_depth);
    if (cfg.schedule_kind == "small") return small_schedule(cfg.schedule_epsilon, cfg.schedule_depth);
    return schedule_from_radii(cfg.schedule_radii);
}

int hull_depth(const BlockSpace& space, const RadiiSchedule& sched) {
    return std::min(space.block_count(), sched.depth());
}

// peeling budget: 1 + delta for one-dimensional blocks, 5 (1 + delta) for
// genuine decompositions; the first d stages only spend their own budgets
double lip_bound_prefix(const ExperimentConfig& cfg, const RadiiSchedule& sched, int d) {
    double budget = 1.0;
    if (sched.has_budgets())
        for (int i = 0; i < d; ++i) budget *= 1.0 + sched.delta[static_cast<std::size_t>(i)];
    else
        budget = 1.0 + std::max(0.0, sched.target_delta);
    return (cfg.space_block_dim == 1 ? 1.0 : 5.0) * budget;
}

std::string verdict_line(bool pass) {
    return std::string("verdict ") + (pass ? "PASS" : "FAIL") + "\n";
}

std::vector<int> resolve_sigma(const ExperimentConfig& cfg, int depth) {
    return cfg.sigma.empty() ? identity_sigma(depth) : cfg.sigma;
}

bool all_euclidean(const BlockSpace& space) {
    if (space.ambient_rule() != PNorm::Two) return false;
    for (int i = 0; i < space.block_count(); ++i)
        if (!space.block(i).is_p() || space.block(i).pkind() != PNorm::Two) return false;
    return true;
}

Outcome run_build_compact(const ExperimentConfig& cfg) {
    BlockSpace space = make_space(cfg);
    RadiiSchedule sched = make_schedule(cfg);
    DiamondCompact hull(space, sched, hull_depth(space, sched));

    double max_fix = 0.0, max_gauge = 0.0;
    for (std::size_t s = 0; s < cfg.budget_samples; ++s) {
        Rng in_rng(derive_seed(cfg.seed, 0xb111d0000ull + s));
        std::vector<double> x = hull.sample_hull(in_rng);
        max_fix = std::max(max_fix, space.distance(x, hull.retract(x)));
        Rng out_rng(derive_seed(cfg.seed, 0xa4a9e0000ull + s));
        std::vector<double> z = space.sample_box(out_rng, 2.0);
        max_gauge = std::max(max_gauge, hull.gauge(hull.retract(z)));
    }
    const bool pass = max_fix <= 1e-12 && max_gauge <= 1.0 + 1e-9;

    std::ostringstream body;
    body << "workers " << cfg.workers << "\n";
    body << "space\n" << space.to_text();
    body << "schedule\n" << sched.to_text();
    body << "fixed_samples " << cfg.budget_samples << "\n";
    body << "max_fix_residual " << format_double(max_fix) << "\n";
    body << "range_samples " << cfg.budget_samples << "\n";
    body << "max_range_gauge " << format_double(max_gauge) << "\n";
    body << verdict_line(pass);

    CsvBuilder csv({"n", "r", "A", "q", "delta", "a", "alpha"});
    for (int n = 1; n <= sched.depth(); ++n) {
        const auto i = static_cast<std::size_t>(n - 1);
        auto opt = [&](const std::vector<double>& v) {
            return v.empty() ? std::string() : format_double(v[i]);
        };
        csv.add_row({std::to_string(n), format_double(sched.r[i]), format_double(sched.A[i]),
                     opt(sched.q), opt(sched.delta), opt(sched.a), opt(sched.alpha)});
    }

    Outcome oc;
    oc.pass = pass;
    oc.report = body.str();
    oc.extra.emplace_back("series.csv", csv.str());
    oc.summary = std::string("build-compact ") + (pass ? "PASS" : "FAIL") + ": max fix residual " +
                 format_double(max_fix);
    return oc;
}

Outcome run_estimate_lipschitz(const ExperimentConfig& cfg) {
    BlockSpace space = make_space(cfg);
    CsvBuilder csv({"depth", "estimate", "bound"});
    double final_estimate = 0.0, final_bound = 0.0;

    std::ostringstream body;
    body << "workers " << cfg.workers << "\n";
    body << "map " << cfg.map_kind << "\n";
    body << "pairs " << cfg.budget_pairs << "\n";

    if (cfg.map_kind == "identity") {
        VecMap id = [](const std::vector<double>& x) { return x; };
        LipschitzReport rep =
            estimate_lipschitz(space, id, box_pair_sampler(space, 2.0), cfg.budget_pairs,
                               derive_seed(cfg.seed, 0x11b0000ull), cfg.workers);
        final_estimate = rep.estimate;
        final_bound = 1.0;
        csv.add_row({std::to_string(space.block_count()), format_double(final_estimate),
                     format_double(final_bound)});
    } else {
        RadiiSchedule sched = make_schedule(cfg);
        const int full = hull_depth(space, sched);
        body << "schedule_kind " << cfg.schedule_kind << "\n";
        for (int d = 1; d <= full; ++d) {
            DiamondCompact hull(space, sched, d);
            LipschitzReport rep = estimate_lipschitz(
                space, hull.retraction_map(), hull.seam_pair_sampler(2.0), cfg.budget_pairs,
                derive_seed(cfg.seed, 0x11b0000ull + static_cast<std::uint64_t>(d)), cfg.workers);
            const double bound = lip_bound_prefix(cfg, sched, d);
            csv.add_row({std::to_string(d), format_double(rep.estimate), format_double(bound)});
            final_estimate = rep.estimate;
            final_bound = bound;
        }
    }

    const bool pass = final_estimate <= final_bound + 1e-6;
    body << "estimate " << format_double(final_estimate) << "\n";
    body << "bound " << format_double(final_bound) << "\n";
    body << verdict_line(pass);

    Outcome oc;
    oc.pass = pass;
    oc.report = body.str();
    oc.extra.emplace_back("series.csv", csv.str());
    oc.summary = "estimate " + format_double(final_estimate) + " vs bound " +
                 format_double(final_bound) + (pass ? " PASS" : " FAIL");
    return oc;
}

Outcome run_check_smallness(const ExperimentConfig& cfg) {
    BlockSpace space = make_space(cfg);
    RadiiSchedule sched = make_schedule(cfg);
    DiamondCompact hull(space, sched, hull_depth(space, sched));
    BoundedSet set = bounded_set_from_hull(hull);
    FundamentalSequence beta = FundamentalSequence::standard(space, space.dim());

    const int depth = cfg.smallness_depth;
    SmallnessSearch search;
    search.height_samples = cfg.budget_samples;
    search.seed = cfg.seed;
    SmallnessCertificate cert =
        check_small(set, beta, cfg.epsilon, resolve_sigma(cfg, depth), depth, search);

    std::ostringstream body;
    body << "workers " << cfg.workers << "\n";
    body << cert.to_text();

    CsvBuilder csv({"n", "sigma", "inner_radius", "height", "ratio", "bound", "pass", "analytic"});
    for (const auto& row : cert.rows)
        csv.add_row({std::to_string(row.n), std::to_string(row.sigma_n),
                     format_double(row.inner_radius), format_double(row.height),
                     format_double(row.ratio), format_double(row.bound),
                     row.pass ? "1" : "0", row.analytic ? "1" : "0"});

    Outcome oc;
    oc.pass = cert.verdict;
    oc.report = body.str() + verdict_line(cert.verdict);
    oc.extra.emplace_back("series.csv", csv.str());
    oc.summary = std::string("smallness ") + (cert.verdict ? "PASS" : "FAIL") + " at " +
                 std::to_string(depth) + " rows";
    return oc;
}

Outcome run_nearest_point(const ExperimentConfig& cfg) {
    BlockSpace space = make_space(cfg);
    RadiiSchedule sched = make_schedule(cfg);
    DiamondCompact hull(space, sched, hull_depth(space, sched));
    const bool euclid = all_euclidean(space);
    const NormHandle handle = ambient_norm_handle(space);

    CsvBuilder csv({"query", "distance", "gap", "iterations", "converged"});
    double max_gap = 0.0;
    std::size_t unconverged = 0, ties = 0;
    for (std::size_t q = 0; q < cfg.budget_queries; ++q) {
        Rng rng(derive_seed(cfg.seed, 0x9e4e0000ull + q));
        std::vector<double> z = space.sample_box(rng, 1.5);
        NearestPointResult res;
        if (euclid) {
            res = nearest_point_fw(hull, z);
        } else {
            GeneralNearestConfig gcfg;
            gcfg.seed = derive_seed(cfg.seed, 0x93e20000ull + q);
            res = nearest_point_general(hull, handle, z, gcfg);
        }
        max_gap = std::max(max_gap, res.gap);
        if (!res.converged) ++unconverged;
        if (!res.tie_note.empty()) ++ties;
        csv.add_row({std::to_string(q), format_double(res.distance), format_double(res.gap),
                     std::to_string(res.iterations), res.converged ? "1" : "0"});
    }

    bool pass = true;
    double induced_lip = 0.0;
    Outcome oc;
    if (euclid) {
        pass = unconverged == 0 && max_gap <= 1e-8;
        VecMap induced = [&hull](const std::vector<double>& x) {
            return nearest_point_fw(hull, x).point;
        };
        const std::size_t lip_pairs = std::min<std::size_t>(cfg.budget_pairs, 2000);
        induced_lip = estimate_lipschitz(space, induced, box_pair_sampler(space, 1.5), lip_pairs,
                                         derive_seed(cfg.seed, 0x11e0000ull), cfg.workers)
                          .estimate;
        pass = pass && induced_lip <= 1.0 + 1e-6;
        ModulusTable omega = estimate_modulus(
            induced, [&space](Rng& rng) { return space.sample_box(rng, 1.5); }, space,
            {1e-3, 1e-2, 1e-1}, 128, derive_seed(cfg.seed, 0x03e0000ull));
        CsvBuilder ocsv({"scale", "omega"});
        for (std::size_t i = 0; i < omega.scales.size(); ++i)
            ocsv.add_row({format_double(omega.scales[i]), format_double(omega.omega[i])});
        oc.extra.emplace_back("omega.csv", ocsv.str());
    }

    std::ostringstream body;
    body << "workers " << cfg.workers << "\n";
    body << "solver " << (euclid ? "frank-wolfe" : "subgradient") << "\n";
    body << "queries " << cfg.budget_queries << "\n";
    body << "max_gap " << format_double(max_gap) << "\n";
    body << "unconverged " << unconverged << "\n";
    body << "tie_notes " << ties << "\n";
    if (euclid) body << "induced_lipschitz " << format_double(induced_lip) << "\n";
    if (!euclid) body << "note subgradient runs are diagnostic; no bound is asserted\n";
    body << verdict_line(pass);

    oc.pass = pass;
    oc.report = body.str();
    oc.extra.emplace_back("series.csv", csv.str());
    oc.summary = std::string(euclid ? "frank-wolfe" : "subgradient") + " nearest point, max gap " +
                 format_double(max_gap) + (pass ? " PASS" : " FAIL");
    return oc;
}

struct PiRun {
    double lip = 0.0;
    std::string lip_source;
    PiCertificate cert;
};

PiRun run_pi_common(const ExperimentConfig& cfg, const BlockSpace& space,
                    const DiamondCompact& hull) {
    PiRun out;
    if (cfg.pi_lip > 0.0) {
        out.lip = cfg.pi_lip;
        out.lip_source = "configured";
    } else {
        LipschitzReport rep =
            estimate_lipschitz(space, hull.retraction_map(), hull.seam_pair_sampler(2.0),
                               cfg.budget_pairs, derive_seed(cfg.seed, 0x11f0000ull), cfg.workers);
        out.lip = std::max(rep.estimate, 1e-6);
        out.lip_source = "estimated";
    }
    const int max_stage =
        cfg.stages.empty() ? 1 : *std::max_element(cfg.stages.begin(), cfg.stages.end());
    PiPipelineConfig pcfg;
    pcfg.smoothing_samples = cfg.pi_smoothing_samples;
    pcfg.box_samples = cfg.pi_box_samples;
    pcfg.seed = cfg.seed;
    pcfg.workers = cfg.workers;
    pcfg.phi_override = cfg.pi_phi_override;
    out.cert = pi_certificate(hull, hull.retraction_map(), out.lip, cfg.epsilon,
                              resolve_sigma(cfg, max_stage), cfg.stages, pcfg);
    return out;
}

void append_stage_csvs(const PiCertificate& cert, Outcome& oc, bool with_stage_table) {
    if (with_stage_table) {
        CsvBuilder stages({"n", "sigma", "phi", "inner_radius", "height", "tau", "rho",
                           "smoothed_lip", "seam_bound", "seam_max", "norm", "lambda", "pass"});
        for (const auto& s : cert.stages)
            stages.add_row({std::to_string(s.n), std::to_string(s.sigma_n),
                            std::to_string(s.phi_n), format_double(s.inner_radius),
                            format_double(s.height), format_double(s.tau), format_double(s.rho),
                            format_double(s.smoothed_lip_budget), format_double(s.seam_bound),
                            format_double(s.seam_max), format_double(s.projection.norm_estimate),
                            format_double(s.projection.lambda_estimate), s.pass ? "1" : "0"});
        oc.extra.emplace_back("series.csv", stages.str());
    }
    CsvBuilder trend({"n", "delta", "seam_max", "norm_estimate"});
    for (const auto& s : cert.stages)
        for (const auto& t : s.trend)
            trend.add_row({std::to_string(s.n), format_double(t.delta),
                           format_double(t.seam_max), format_double(t.norm_estimate)});
    oc.extra.emplace_back("trend.csv", trend.str());
}

Outcome run_extract_projection(const ExperimentConfig& cfg) {
    BlockSpace space = make_space(cfg);
    RadiiSchedule sched = make_schedule(cfg);
    DiamondCompact hull(space, sched, hull_depth(space, sched));
    PiRun pi = run_pi_common(cfg, space, hull);

    bool pass = !pi.cert.stages.empty();
    for (const auto& s : pi.cert.stages) pass = pass && s.pass;

    std::ostringstream body;
    body << "workers " << cfg.workers << "\n";
    body << "lip_reference " << format_double(pi.lip) << " " << pi.lip_source << "\n";
    if (pi.cert.stages.empty()) {
        body << "stages 0\n" << verdict_line(false);
        Outcome oc;
        oc.report = body.str();
        oc.summary = "no stages requested FAIL";
        return oc;
    }
    const PiStageReport& first = pi.cert.stages.front();
    body << "stage " << first.n << "\n";
    body << first.projection.to_text();
    body << "seam_bound " << format_double(first.seam_bound) << "\n";
    body << "seam_max " << format_double(first.seam_max) << "\n";
    if (!first.note.empty()) body << "note " << first.note << "\n";
    body << verdict_line(pass);

    Outcome oc;
    oc.pass = pass;
    oc.report = body.str();
    oc.extra.emplace_back("matrix.csv", first.projection.matrix_csv());
    append_stage_csvs(pi.cert, oc, false);
    oc.summary = "projection norm " + format_double(first.projection.norm_estimate) + " vs 4L " +
                 format_double(first.projection.bound_4l) + (pass ? " PASS" : " FAIL");
    return oc;
}

Outcome run_pi_certificate(const ExperimentConfig& cfg) {
    BlockSpace space = make_space(cfg);
    RadiiSchedule sched = make_schedule(cfg);
    DiamondCompact hull(space, sched, hull_depth(space, sched));
    PiRun pi = run_pi_common(cfg, space, hull);

    std::ostringstream body;
    body << "workers " << cfg.workers << "\n";
    body << "lip_reference " << format_double(pi.lip) << " " << pi.lip_source << "\n";
    body << pi.cert.to_text();

    Outcome oc;
    oc.pass = pi.cert.verdict;
    oc.report = body.str();
    append_stage_csvs(pi.cert, oc, true);
    oc.summary = std::string("pi certificate ") + (pi.cert.verdict ? "PASS" : "FAIL") + " over " +
                 std::to_string(pi.cert.stages.size()) + " stages";
    return oc;
}

Outcome run_counterexample_audit(const ExperimentConfig& cfg) {
    AssembledModel model = assemble_model(cfg.model_count, cfg.model_eps, {}, {}, cfg.seed);
    // gauge-radial candidate: exact on the hull, 2-Lipschitz-style outside
    VecMap candidate = [&model](const std::vector<double>& x) {
        const double g = model.hull_gauge(x);
        if (g <= 1.0) return x;
        if (std::isinf(g)) return std::vector<double>(x.size(), 0.0);
        std::vector<double> y = x;
        for (auto& v : y) v /= g;
        return y;
    };
    AuditConfig acfg;
    acfg.fix_samples = cfg.audit_fix;
    acfg.range_samples = cfg.audit_range;
    acfg.pairs_per_block = cfg.audit_pairs;
    acfg.seed = cfg.seed;
    acfg.workers = cfg.workers;
    AuditReport report = retraction_audit(model, candidate, cfg.audit_fdd, cfg.model_eps, acfg);

    std::ostringstream body;
    body << "workers " << cfg.workers << "\n";
    body << "candidate gauge-radial\n";
    body << report.to_text();
    body << verdict_line(true);

    Outcome oc;
    oc.pass = true;  // evidence rows are findings, not failures
    oc.report = body.str();
    oc.extra.emplace_back("series.csv", report.csv());
    oc.extra.emplace_back("model.txt", model.to_text());
    std::size_t flagged = 0;
    for (const auto& r : report.rows) flagged += r.evidence ? 1 : 0;
    oc.summary = "audit complete, " + std::to_string(flagged) + " of " +
                 std::to_string(report.rows.size()) + " blocks show blow-up evidence";
    return oc;
}

Outcome dispatch(const ExperimentConfig& cfg) {
    if (cfg.experiment == "build-compact") return run_build_compact(cfg);
    if (cfg.experiment == "estimate-lipschitz") return run_estimate_lipschitz(cfg);
    if (cfg.experiment == "check-smallness") return run_check_smallness(cfg);
    if (cfg.experiment == "nearest-point") return run_nearest_point(cfg);
    if (cfg.experiment == "extract-projection") return run_extract_projection(cfg);
    if (cfg.experiment == "pi-certificate") return run_pi_certificate(cfg);
    return run_counterexample_audit(cfg);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
    Outcome oc;
    try {
        oc = dispatch(cfg);
    } catch (const std::exception& e) {
        oc.pass = false;
        oc.extra.clear();
        oc.report = std::string("error ") + e.what() + "\n" + verdict_line(false);
        oc.summary = std::string("pipeline failure: ") + e.what();
    }

    RunResult result;
    result.exit_code = oc.pass ? 0 : 1;
    result.summary = oc.summary.empty() ? (oc.pass ? "PASS" : "FAIL") : oc.summary;
    const std::filesystem::path out(cfg.out);
    const std::string report_path = (out / "report.txt").string();
    write_text_file(report_path, report_preamble(cfg.experiment, cfg.hash()) + oc.report);
    result.artifacts.push_back(report_path);
    for (const auto& [name, content] : oc.extra) {
        const std::string path = (out / name).string();
        write_text_file(path, content);
        result.artifacts.push_back(path);
    }
    return result;
}

std::string describe_experiment(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "retractlab-plan v1\n";
    os << "experiment " << cfg.experiment << "\n";
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(cfg.hash()));
    os << "config_hash " << hex << "\n";
    os << "seed " << cfg.seed << " workers " << cfg.workers << "\n";

    if (cfg.experiment == "counterexample-audit") {
        os << "model count " << cfg.model_count << " eps " << format_double(cfg.model_eps) << "\n";
        os << "audit fdd " << format_double(cfg.audit_fdd) << " pairs " << cfg.audit_pairs
           << " fix_samples " << cfg.audit_fix << " range_samples " << cfg.audit_range << "\n";
        os << "candidate gauge-radial\n";
        return os.str();
    }

    BlockSpace space = make_space(cfg);
    RadiiSchedule sched = make_schedule(cfg);
    os << "space blocks " << space.block_count() << " block_dim " << cfg.space_block_dim
       << " dim " << space.dim() << "\n";
    os << "schedule kind " << cfg.schedule_kind << " depth " << sched.depth() << " target_delta "
       << format_double(sched.target_delta) << "\n";
    os << "hull depth " << hull_depth(space, sched) << "\n";

    if (cfg.experiment == "build-compact") {
        os << "samples " << cfg.budget_samples << "\n";
    } else if (cfg.experiment == "estimate-lipschitz") {
        os << "map " << cfg.map_kind << " pairs " << cfg.budget_pairs << "\n";
        os << "bound " << format_double(lip_bound_prefix(cfg, sched, hull_depth(space, sched)))
           << "\n";
    } else if (cfg.experiment == "check-smallness") {
        os << "epsilon " << format_double(cfg.epsilon) << " rows " << cfg.smallness_depth << "\n";
        std::vector<int> sigma = resolve_sigma(cfg, cfg.smallness_depth);
        for (int n = 1; n <= cfg.smallness_depth; ++n) {
            const int m = sigma[static_cast<std::size_t>(n - 1)];
            os << "row n " << n << " sigma " << m << " bound "
               << format_double(smallness_bound_at(m, cfg.epsilon)) << "\n";
        }
    } else if (cfg.experiment == "nearest-point") {
        os << "solver " << (all_euclidean(space) ? "frank-wolfe" : "subgradient") << " queries "
           << cfg.budget_queries << "\n";
    } else {
        os << "epsilon " << format_double(cfg.epsilon) << "\n";
        double lip = cfg.pi_lip;
        if (lip > 0.0) {
            os << "lip_reference " << format_double(lip) << " configured\n";
        } else {
            lip = lip_bound_prefix(cfg, sched, hull_depth(space, sched));
            os << "lip_reference estimated at run time; stage parameters shown at the budget "
               << format_double(lip) << "\n";
        }
        os << "box_samples " << cfg.pi_box_samples << " smoothing_samples "
           << cfg.pi_smoothing_samples << "\n";
        os << "stages " << cfg.stages.size() << "\n";
        const int max_stage =
            cfg.stages.empty() ? 1 : *std::max_element(cfg.stages.begin(), cfg.stages.end());
        std::vector<int> sigma = resolve_sigma(cfg, max_stage);
        bool closed_form = true;
        for (int i = 0; i < space.block_count(); ++i) closed_form = closed_form && space.block(i).is_p();
        DiamondCompact hull(space, sched, hull_depth(space, sched));
        BoundedSet set = bounded_set_from_hull(hull);
        FundamentalSequence beta = FundamentalSequence::standard(space, space.dim());
        for (int n : cfg.stages) {
            os << "stage n " << n;
            try {
                if (static_cast<int>(sigma.size()) < n)
                    throw std::invalid_argument("sigma does not cover this stage");
                const int m = sigma[static_cast<std::size_t>(n - 1)];
                const long long ph =
                    cfg.pi_phi_override > 0 ? cfg.pi_phi_override : phi_at(m, cfg.epsilon);
                os << " sigma " << m << " phi " << ph;
                if (closed_form) {
                    const double h = height(set, beta, m);
                    const double r = inner_radius(set, beta, m);
                    os << " inner_radius " << format_double(r) << " height " << format_double(h)
                       << " tau " << format_double(static_cast<double>(ph) * h / lip) << " rho "
                       << format_double(h * (static_cast<double>(ph) + 2.0));
                } else {
                    os << " geometry resolved at run time (table-norm blocks)";
                }
                os << "\n";
            } catch (const std::exception& e) {
                os << " diagnostic: " << e.what() << "\n";
            }
        }
    }
    return os.str();
}

}  // namespace retractlab
