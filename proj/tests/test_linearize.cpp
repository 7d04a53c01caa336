#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "retractlab/linearize.hpp"

using namespace retractlab;

namespace {

std::vector<double> apply_rows(const std::vector<std::vector<double>>& rows,
                               const std::vector<double>& x) {
    std::vector<double> out(rows.size(), 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = vec_dot(rows[i], x);
    return out;
}

}  // namespace

TEST_CASE("smoothing keeps constants and records its budgets") {
    BlockSpace dom = BlockSpace::ones(3, PNorm::Two, PNorm::Two);
    VecMap constant = [](const std::vector<double>& x) {
        (void)x;
        return std::vector<double>{1.5, -2.5};
    };
    SmoothedMap sm(constant, dom, 0.1, 16, 42, 1.0, 0.0);
    std::vector<double> x{0.3, -0.2, 0.7};
    auto y = sm(x);
    CHECK(y[0] == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(-2.5).epsilon(1e-15));

    // budget arithmetic: L (1 + D h / (L tau)) and L tau + 2 h
    SmoothedMap budget(constant, dom, 0.25, 8, 1, 2.0, 0.05);
    CHECK(budget.lip_budget() ==
          doctest::Approx(2.0 * (1.0 + 3.0 * 0.05 / (2.0 * 0.25))).epsilon(1e-15));
    CHECK(budget.deviation_budget() == doctest::Approx(2.0 * 0.25 + 0.1).epsilon(1e-15));
    // tau = phi h / L with phi = dim makes the budget exactly 2L
    const double h = 0.05, L = 2.0;
    SmoothedMap doubled(constant, dom, 3.0 * h / L, 8, 1, L, h);
    CHECK(doubled.lip_budget() == doctest::Approx(2.0 * L).epsilon(1e-14));
}

TEST_CASE("smoothing is deterministic in the seed and the point") {
    BlockSpace dom = BlockSpace::ones(2, PNorm::Two, PNorm::Two);
    DiamondCompact K(dom, schedule_from_radii({1.0, 0.25}), 2);
    VecMap base = K.retraction_map();
    SmoothedMap a(base, dom, 0.05, 32, 7, 2.0, 0.0);
    SmoothedMap b(base, dom, 0.05, 32, 7, 2.0, 0.0);
    SmoothedMap c(base, dom, 0.05, 32, 8, 2.0, 0.0);
    std::vector<double> x{0.9, 0.3};  // on the clip branch, so the average moves
    CHECK(a(x) == a(x));
    CHECK(a(x) == b(x));
    CHECK(a(x) != c(x));
}

TEST_CASE("smoothed maps stay within the deviation budget of the base") {
    BlockSpace dom = BlockSpace::ones(3, PNorm::Two, PNorm::Two);
    DiamondCompact K(dom, schedule_from_radii({1.0, 0.5, 0.25}), 3);
    VecMap base = K.retraction_map();
    auto rep = estimate_lipschitz(dom, base, box_pair_sampler(dom, 1.5), 4000, 3);
    const double L = rep.estimate * 1.05;

    Rng rng(11);
    double prev = std::numeric_limits<double>::infinity();
    for (double tau : {0.2, 0.02, 0.002}) {
        SmoothedMap sm(base, dom, tau, 64, 5, L, 0.0);
        double worst = 0.0;
        Rng probe(13);
        for (int rep2 = 0; rep2 < 60; ++rep2) {
            auto x = dom.sample_box(probe, 1.25);
            auto diff = vec_sub(sm(x), base(x));
            worst = std::max(worst, dom.ambient_norm(diff));
        }
        CHECK(worst <= sm.deviation_budget() + 1e-12);
        CHECK(worst <= prev + 1e-12);
        prev = worst;
    }
    (void)rng;
}

TEST_CASE("smoothing guards its trusted input region") {
    BlockSpace dom = BlockSpace::ones(2, PNorm::Two, PNorm::Two);
    VecMap id = [](const std::vector<double>& x) { return x; };
    SmoothedMap sm(id, dom, 0.1, 8, 1, 1.0, 0.0, 1.0);
    std::vector<double> inside{0.5, 0.5};
    CHECK_NOTHROW((void)sm(inside));
    std::vector<double> outside{3.0, 0.0};
    CHECK_THROWS_AS((void)sm(outside), std::domain_error);
    std::vector<double> shorty{0.5};
    CHECK_THROWS_AS((void)sm(shorty), std::invalid_argument);

    // inputs longer than the domain are fine: only leading coordinates wiggle
    BlockSpace half = BlockSpace::ones(1, PNorm::Two, PNorm::Two);
    SmoothedMap wide(id, half, 0.1, 8, 1, 1.0, 0.0);
    std::vector<double> padded{0.5, 0.25};
    auto out = wide(padded);
    CHECK(out[1] == 0.25);
}

TEST_CASE("frames and their validation") {
    BlockSpace s = BlockSpace::ones(3, PNorm::One, PNorm::One);
    Frame f = canonical_frame(s, 2, 3);
    CHECK(f.size() == 3);
    CHECK(f.base_count == 2);
    CHECK_NOTHROW(validate_frame(f, s));
    std::vector<double> x{0.25, -0.5, 2.0};
    CHECK(f.coefficient(0, x) == 0.25);
    CHECK(f.coefficient(2, x) == 2.0);

    Frame bad = f;
    bad.vectors[0][0] = 2.0;  // no longer norm one, breaks biorthogonality too
    CHECK_THROWS_AS(validate_frame(bad, s), std::invalid_argument);
    Frame swapped = f;
    std::swap(swapped.functionals[0], swapped.functionals[1]);
    CHECK_THROWS_AS(validate_frame(swapped, s), std::invalid_argument);
    CHECK_THROWS_AS((void)canonical_frame(s, 2, 5), std::out_of_range);
    CHECK_THROWS_AS((void)canonical_frame(s, 3, 2), std::out_of_range);
}

TEST_CASE("averaging boxes: volumes, sections, samples") {
    BlockSpace s1 = BlockSpace::ones(1, PNorm::Two, PNorm::Two);
    AveragingBox line(canonical_frame(s1, 1, 1), 1.0, 0.0, s1);
    CHECK(line.volume() == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(line.section_ratio() == doctest::Approx(0.5).epsilon(1e-15));

    BlockSpace s3 = BlockSpace::ones(3, PNorm::Two, PNorm::Two);
    AveragingBox box(canonical_frame(s3, 2, 3), 0.5, 0.1, s3);
    // 2^3 r^2 delta / 2! with r = 1/2, delta = 1/10
    CHECK(box.volume() == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(box.section_ratio() == doctest::Approx(2.0 / (2.0 * 0.5)).epsilon(1e-15));
    CHECK(box.section_volume(0) == doctest::Approx(box.volume() * box.section_ratio()).epsilon(1e-12));

    Rng rng(17);
    double spread = 0.0;
    std::vector<std::vector<double>> pts;
    for (int rep = 0; rep < 400; ++rep) {
        auto p = box.sample(rng);
        double base_mass = 0.0;
        for (int i = 0; i < box.base_count(); ++i)
            base_mass += std::abs(box.frame().coefficient(i, p));
        CHECK(base_mass <= 0.5 + 1e-12);
        for (int i = box.base_count(); i < box.total_count(); ++i)
            CHECK(std::abs(box.frame().coefficient(i, p)) <= 0.1 + 1e-12);
        pts.push_back(std::move(p));
    }
    for (std::size_t i = 1; i < pts.size(); ++i)
        spread = std::max(spread, s3.distance(pts[i - 1], pts[i]));
    CHECK(spread <= box.diameter() + 1e-12);
    CHECK(spread >= 0.5 * box.diameter());

    CHECK_THROWS_AS(AveragingBox(canonical_frame(s3, 2, 3), -1.0, 0.1, s3), std::invalid_argument);
    CHECK_THROWS_AS((void)box.section_volume(2), std::out_of_range);
}

TEST_CASE("averaged derivatives recover linear maps exactly") {
    BlockSpace s = BlockSpace::ones(3, PNorm::Two, PNorm::Two);
    Frame frame = canonical_frame(s, 2, 3);
    AveragingBox box(frame, 0.5, 0.1, s);

    std::vector<std::vector<double>> rows{{1.0, 2.0, 0.0}, {0.0, 3.0, -1.0}, {0.5, 0.0, 1.0}};
    VecMap lin = [&rows](const std::vector<double>& x) { return apply_rows(rows, x); };

    for (auto est : {DerivativeEstimator::Segment, DerivativeEstimator::FiniteDifference}) {
        auto op = average_derivative(lin, box, 3, 500, 1e-5, 23, est);
        REQUIRE(op.columns.size() == 3);
        for (int j = 0; j < 3; ++j) {
            auto expect = apply_rows(rows, frame.vectors[static_cast<std::size_t>(j)]);
            for (int i = 0; i < 3; ++i)
                CHECK(op.columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] ==
                      doctest::Approx(expect[static_cast<std::size_t>(i)]).epsilon(1e-9));
        }
        for (int j = 0; j < 3; ++j)
            CHECK(op.used[static_cast<std::size_t>(j)] + op.skipped[static_cast<std::size_t>(j)] ==
                  500);
    }
}

TEST_CASE("averaged derivative of a retraction fixing the box is the identity") {
    BlockSpace s = BlockSpace::ones(2, PNorm::Two, PNorm::Two);
    DiamondCompact K(s, schedule_from_radii({1.0, 0.5}), 2);
    Frame frame = canonical_frame(s, 1, 2);
    // inner radius of the hull is 1/sqrt(5) > 0.30, so this box sits inside
    AveragingBox box(frame, 0.25, 0.05, s);
    auto op = average_derivative(K.retraction_map(), box, 2, 400, 1e-6, 29);
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i)
            CHECK(op.columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] ==
                  doctest::Approx(frame.vectors[static_cast<std::size_t>(j)]
                                               [static_cast<std::size_t>(i)]).epsilon(1e-9));
}

TEST_CASE("averaged derivatives are worker invariant") {
    BlockSpace s = BlockSpace::ones(3, PNorm::Two, PNorm::Two);
    DiamondCompact K(s, schedule_from_radii({1.0, 0.5, 0.25}), 3);
    Frame frame = canonical_frame(s, 2, 3);
    AveragingBox box(frame, 0.3, 0.05, s);
    auto one = average_derivative(K.retraction_map(), box, 3, 300, 1e-5, 31,
                                  DerivativeEstimator::Segment, 1);
    auto four = average_derivative(K.retraction_map(), box, 3, 300, 1e-5, 31,
                                   DerivativeEstimator::Segment, 4);
    CHECK(one.columns == four.columns);
    CHECK(one.used == four.used);
    CHECK(one.skipped == four.skipped);
    CHECK(four.workers == 4);
}

TEST_CASE("projection extraction from a true projection") {
    BlockSpace s = BlockSpace::ones(3, PNorm::Two, PNorm::Two);
    Frame frame = canonical_frame(s, 2, 3);
    AveragingBox box(frame, 0.5, 0.1, s);
    VecMap proj = [](const std::vector<double>& x) {
        return std::vector<double>{x[0], x[1], 0.0};
    };
    auto op = average_derivative(proj, box, 3, 400, 1e-5, 37);
    auto cert = extract_projection(op, frame, s, 1.0, 0.5);
    CHECK(cert.half_condition);
    CHECK(cert.identity_residual <= 1e-9);
    CHECK(cert.projection_residual <= 1e-9);
    CHECK(cert.norm_estimate == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(cert.bound_4l == 4.0);
    CHECK(cert.bound_8l == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(cert.lambda_estimate == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(cert.pass_4l);
    CHECK(cert.pass_8l);
    REQUIRE(cert.matrix.size() == 2);
    CHECK(cert.matrix[0][0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cert.matrix[0][1] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(cert.matrix[1][1] == doctest::Approx(1.0).epsilon(1e-9));

    auto text = cert.to_text();
    CHECK(text.find("bound_4l_margin 5") != std::string::npos);
    CHECK(text.find("bound_8l_margin 20") != std::string::npos);
    CHECK(text.find("pass_4l 1") != std::string::npos);
    auto csv = cert.matrix_csv();
    CHECK(csv.find("# base_count 2") != std::string::npos);

    CHECK_THROWS_AS((void)extract_projection(op, frame, s, 0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS((void)extract_projection(op, frame, s, 1.0, 1.5), std::domain_error);
}

TEST_CASE("degenerate operators are reported, not extracted") {
    BlockSpace s = BlockSpace::ones(3, PNorm::Two, PNorm::Two);
    Frame frame = canonical_frame(s, 2, 3);
    AveragingBox box(frame, 0.5, 0.1, s);
    VecMap zero = [](const std::vector<double>& x) {
        return std::vector<double>(x.size(), 0.0);
    };
    auto op = average_derivative(zero, box, 3, 200, 1e-5, 41);
    auto cert = extract_projection(op, frame, s, 1.0, 0.5);
    CHECK_FALSE(cert.half_condition);
    CHECK_FALSE(cert.note.empty());
    CHECK(cert.matrix.empty());
}

TEST_CASE("polyhedral surrogate norms sandwich the base norm") {
    for (PNorm p : {PNorm::Inf, PNorm::Two}) {
        BlockSpace s = BlockSpace::ones(2, p, p);
        auto poly = epsnet_polyhedral_norm(s, 0.25, 4096, 3);
        CHECK(poly.net_size == poly.table.rows.size());
        // two signed coordinate functionals already reproduce the sup norm
        CHECK(poly.net_size >= (p == PNorm::Inf ? 2u : 4u));
        BlockNorm table_norm = BlockNorm::table(poly.table);
        Rng rng(43);
        for (int rep = 0; rep < 500; ++rep) {
            auto x = s.sample_box(rng, 2.0);
            const double surround = table_norm.eval(x);
            const double exact = s.ambient_norm(x);
            CHECK(surround <= exact + 1e-12);
            CHECK(exact <= surround / (1.0 - 0.25) + 1e-12);
        }
    }
    BlockSpace big = BlockSpace::ones(5, PNorm::Two, PNorm::Two);
    CHECK_THROWS_AS((void)epsnet_polyhedral_norm(big, 0.25), std::invalid_argument);
    BlockSpace ok = BlockSpace::ones(2, PNorm::Two, PNorm::Two);
    CHECK_THROWS_AS((void)epsnet_polyhedral_norm(ok, 0.0), std::domain_error);
    CHECK_THROWS_AS((void)epsnet_polyhedral_norm(ok, 1.0), std::domain_error);
}

TEST_CASE("stage certificates on a strongly separated ladder") {
    BlockSpace s = BlockSpace::ones(9, PNorm::Inf, PNorm::Inf);
    std::vector<double> radii{1.0, 1.0 / 200.0, 1e-6};
    while (radii.size() < 9) radii.push_back(radii.back() / 2.0);
    DiamondCompact K(s, schedule_from_radii(radii), 9);

    PiPipelineConfig cfg;
    cfg.thickness_ladder = {1e-2, 1e-3};
    cfg.smoothing_samples = 16;
    cfg.box_samples = 300;
    cfg.seed = 3;
    std::vector<int> sigma{2};
    std::vector<int> stages{1};
    auto cert = pi_certificate(K, K.retraction_map(), 1.0, 1.0, sigma, stages, cfg);

    CHECK(cert.verdict);
    REQUIRE(cert.stages.size() == 1);
    const auto& st = cert.stages.front();
    CHECK(st.sigma_n == 2);
    CHECK(st.phi_n == 9);
    CHECK(st.inner_radius == doctest::Approx(1.0 / 201.0).epsilon(1e-12));
    CHECK(st.height == doctest::Approx(1e-6).epsilon(1e-12));
    CHECK(st.tau == doctest::Approx(9.0 * st.height).epsilon(1e-14));
    CHECK(st.rho == doctest::Approx(st.height * 11.0).epsilon(1e-14));
    CHECK(st.seam_bound == doctest::Approx(2.0 * st.rho / st.inner_radius).epsilon(1e-12));
    CHECK(st.smoothed_lip_budget == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(st.seam_max <= st.seam_bound + cfg.seam_tolerance);
    CHECK(st.projection.identity_residual <= 1e-9);
    CHECK(st.projection.projection_residual <= 1e-9);
    CHECK(st.projection.pass_4l);
    CHECK(st.seam.size() == 2);
    CHECK(st.trend.size() == 2);

    auto text = cert.to_text();
    CHECK(text.find("verdict PASS") != std::string::npos);
    CHECK(text.find("vacuous") != std::string::npos);

    // worker count changes nothing in the certificate text
    PiPipelineConfig two = cfg;
    two.workers = 2;
    auto cert2 = pi_certificate(K, K.retraction_map(), 1.0, 1.0, sigma, stages, two);
    CHECK(cert2.to_text() == text);

    // a substitute witness dimension equal to the base keeps the projection trivial
    PiPipelineConfig tiny = cfg;
    tiny.phi_override = 2;
    auto degenerate = pi_certificate(K, K.retraction_map(), 1.0, 1.0, sigma, stages, tiny);
    REQUIRE(degenerate.stages.size() == 1);
    CHECK(degenerate.stages.front().projection.norm_estimate == doctest::Approx(1.0).epsilon(1e-6));

    // a witness dimension below the base is a stage failure, not a throw
    PiPipelineConfig bad = cfg;
    bad.phi_override = 1;
    auto broken = pi_certificate(K, K.retraction_map(), 1.0, 1.0, sigma, stages, bad);
    CHECK_FALSE(broken.verdict);
    CHECK(broken.stages.front().note.find("witness dimension") != std::string::npos);
}

TEST_CASE("stage certificates enforce their preconditions") {
    BlockSpace s = BlockSpace::ones(6, PNorm::One, PNorm::One);
    DiamondCompact K(s, default_schedule(6), 6);
    std::vector<int> stages{2};
    // default ladder fails smallness at stage 2
    CHECK_THROWS_AS(
        (void)pi_certificate(K, K.retraction_map(), 1.0, 0.5, identity_sigma(2), stages),
        std::invalid_argument);
    // sigma shorter than the deepest stage
    BlockSpace s2 = BlockSpace::ones(6, PNorm::One, PNorm::One);
    DiamondCompact K2(s2, small_schedule(0.5, 5), 6);
    std::vector<int> deep{3};
    CHECK_THROWS_AS(
        (void)pi_certificate(K2, K2.retraction_map(), 1.0, 0.5, std::vector<int>{1, 2}, deep),
        std::invalid_argument);
    // no stages at all
    CHECK_THROWS_AS((void)pi_certificate(K2, K2.retraction_map(), 1.0, 0.5, identity_sigma(2),
                                         std::vector<int>{}),
                    std::invalid_argument);
    // nonpositive Lipschitz reference
    CHECK_THROWS_AS((void)pi_certificate(K2, K2.retraction_map(), 0.0, 0.5, identity_sigma(2),
                                         std::vector<int>{1}),
                    std::invalid_argument);
}
