#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "retractlab/diamond.hpp"
#include "retractlab/estimators.hpp"

using namespace retractlab;

namespace {

DiamondCompact two_block_hull(const BlockSpace& space) {
    return DiamondCompact(space, schedule_from_radii({1.0, 0.25}), 2);
}

}  // namespace

TEST_CASE("gauge hand values") {
    BlockSpace s = BlockSpace::ones(2, PNorm::One, PNorm::One);
    auto K = two_block_hull(s);
    CHECK(K.gauge(std::vector<double>{0.0, 0.0}) == 0.0);
    CHECK(K.gauge(std::vector<double>{0.5, 0.1}) == doctest::Approx(0.9).epsilon(1e-15));
    // block-ball boundary points sit on the gauge = 1 shell
    CHECK(K.gauge(std::vector<double>{1.0, 0.0}) == 1.0);
    CHECK(K.gauge(std::vector<double>{0.0, 0.25}) == 1.0);
    // homogeneity
    CHECK(K.gauge(std::vector<double>{1.0, 0.2}) ==
          doctest::Approx(2.0 * K.gauge(std::vector<double>{0.5, 0.1})).epsilon(1e-15));
}

TEST_CASE("stage radius and one peeling stage by hand") {
    BlockSpace s = BlockSpace::ones(2, PNorm::One, PNorm::One);
    auto K = two_block_hull(s);
    std::vector<double> x{0.5, 0.5};
    CHECK(K.stage_radius(x, 1) == 1.0);  // constant r_1
    CHECK(K.stage_radius(std::vector<double>{0.0, 0.0}, 2) == 0.25);
    CHECK(K.stage_radius(x, 2) == doctest::Approx(0.125).epsilon(1e-15));

    auto F22 = K.peel_stage(x, 2, 2);
    CHECK(F22[0] == 0.5);
    CHECK(F22[1] == doctest::Approx(0.125).epsilon(1e-15));

    // gauge <= 1 keeps the point, including the exact tie
    std::vector<double> tie{1.0, 0.0};
    CHECK(K.peel_stage(tie, 2, 2) == tie);
    // predecessors already out of budget collapse the block
    std::vector<double> heavy{2.0, 0.5};
    CHECK(K.peel_stage(heavy, 2, 2) == std::vector<double>{2.0, 0.0});
}

TEST_CASE("closed form retraction hand values") {
    BlockSpace s = BlockSpace::ones(2, PNorm::One, PNorm::One);
    auto K = two_block_hull(s);
    CHECK(K.retract(std::vector<double>{2.0, 0.0}) == std::vector<double>{1.0, 0.0});
    CHECK(K.retract(std::vector<double>{0.0, 0.0}) == std::vector<double>{0.0, 0.0});
    std::vector<double> inside{0.5, 0.1};
    CHECK(K.retract(inside) == inside);
}

TEST_CASE("retraction fixes the hull exactly and lands inside") {
    for (PNorm p : {PNorm::One, PNorm::Two, PNorm::Inf}) {
        BlockSpace s = BlockSpace::ones(6, p, p);
        DiamondCompact K(s, default_schedule(6), 6);
        Rng rng(31);
        for (int rep = 0; rep < 300; ++rep) {
            auto x = K.sample_hull(rng);
            CHECK(K.retract(x) == x);  // identity branch, no tolerance
            auto z = s.sample_box(rng, 2.0);
            auto rz = K.retract(z);
            CHECK(K.gauge(rz) <= 1.0 + 1e-9);
            CHECK(K.contains(rz));
        }
    }
}

TEST_CASE("composite of stages equals the shortcut") {
    for (PNorm p : {PNorm::One, PNorm::Two}) {
        BlockSpace s = BlockSpace::ones(6, p, p);
        DiamondCompact K(s, default_schedule(6), 6);
        Rng rng(37);
        for (int rep = 0; rep < 400; ++rep) {
            auto x = s.sample_box(rng, 1.5);
            auto a = K.retract(x);
            auto b = K.retract_by_stages(x);
            REQUIRE(a.size() == b.size());
            for (std::size_t i = 0; i < a.size(); ++i)
                CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("stage radius map obeys the seam bound per stage") {
    BlockSpace s = BlockSpace::ones(10, PNorm::One, PNorm::One);
    auto sched = default_schedule(10);
    DiamondCompact K(s, sched, 10);
    NormFn in_norm = [&s](std::span<const double> v) { return s.ambient_norm(v); };
    NormFn out_norm = [](std::span<const double> v) { return std::abs(v[0]); };
    for (int m = 2; m <= 10; ++m) {
        VecMap fm = [&K, m](const std::vector<double>& x) {
            return std::vector<double>{K.stage_radius(x, m)};
        };
        auto rep = estimate_lipschitz(fm, box_pair_sampler(s, 1.0), 2000,
                                      1000 + static_cast<std::uint64_t>(m), in_norm, out_norm);
        const double bound = sched.r[m - 1] * sched.A[m - 2] / sched.r[m - 2];
        CHECK(rep.estimate <= bound + 1e-9);
    }
}

TEST_CASE("peel stage rejects points outside its domain") {
    BlockSpace s = BlockSpace::ones(2, PNorm::One, PNorm::One);
    auto K = two_block_hull(s);
    // mass on block 2 with gauge > 1: neither prefix-supported nor in the hull
    std::vector<double> bad{2.0, 2.0};
    CHECK_THROWS_AS((void)K.peel_stage(bad, 2, 1), std::domain_error);
    // but it is a legal input for m = 2 (supported on the first 2 blocks)
    CHECK_NOTHROW((void)K.peel_stage(bad, 2, 2));
}

TEST_CASE("vanishing active block falls back to the continuity limit") {
    BlockSpace s = BlockSpace::ones(2, PNorm::One, PNorm::One);
    auto K = two_block_hull(s);
    const double eps = 1e-16;
    std::vector<double> x{1.0 - eps, 1e-15};
    REQUIRE(K.gauge(x) > 1.0);
    auto r = K.retract(x);
    CHECK(r == std::vector<double>{1.0 - eps, 0.0});
    CHECK(K.clip_fallbacks() >= 1);
}

TEST_CASE("membership needs both gauge and support depth") {
    BlockSpace s = BlockSpace::ones(3, PNorm::One, PNorm::One);
    DiamondCompact K(s, schedule_from_radii({1.0, 0.25}), 2);
    CHECK(K.depth() == 2);
    CHECK(K.contains(std::vector<double>{0.5, 0.0, 0.0}));
    CHECK_FALSE(K.contains(std::vector<double>{0.0, 0.0, 0.1}));
    CHECK(K.gauge_prefix(std::vector<double>{0.0, 0.0, 0.1}, 2) == 0.0);
}

TEST_CASE("hull samplers respect the gauge") {
    BlockSpace s = BlockSpace::uniform(3, 2, PNorm::Two, PNorm::Two);
    DiamondCompact K(s, default_schedule(3), 3);
    Rng rng(41);
    for (int rep = 0; rep < 200; ++rep) {
        CHECK(K.gauge(K.sample_hull(rng)) <= 1.0 + 1e-9);
        CHECK(K.gauge(K.sample_boundary(rng)) == doctest::Approx(1.0).epsilon(1e-9));
        auto e = K.sample_extreme(rng);
        CHECK(K.gauge(e) == doctest::Approx(1.0).epsilon(1e-9));
        int touched = 0;
        for (int b = 0; b < 3; ++b)
            if (s.block_norm(b, s.block_component(e, b)) > 1e-12) ++touched;
        CHECK(touched == 1);
        CHECK(K.gauge(K.sample_hull(rng, 0.5)) <= 0.5 + 1e-9);
    }
}

TEST_CASE("sampled hull points span the whole truncation") {
    BlockSpace s = BlockSpace::ones(5, PNorm::Two, PNorm::Two);
    DiamondCompact K(s, default_schedule(5), 5);
    Rng rng(43);
    std::vector<std::vector<double>> basis;
    for (int rep = 0; rep < 200 && static_cast<int>(basis.size()) < 5; ++rep) {
        auto x = K.sample_hull(rng);
        for (const auto& b : basis) {
            double c = vec_dot(x, b) / vec_dot(b, b);
            vec_axpy(x, -c, b);
        }
        if (s.ambient_norm(x) > 1e-10) basis.push_back(x);
    }
    CHECK(basis.size() == 5);
}

TEST_CASE("block ball retraction") {
    BlockSpace s = BlockSpace::ones(3, PNorm::Two, PNorm::Two);
    DiamondCompact K(s, default_schedule(3), 3);
    const double r2 = K.schedule().r[1];
    std::vector<double> in_ball{0.0, r2 / 2.0, 0.0};
    CHECK(K.block_ball_retraction(in_ball, 2) == in_ball);
    std::vector<double> off{0.5, 0.0, 0.0};
    CHECK(K.block_ball_retraction(off, 2) == std::vector<double>{0.0, 0.0, 0.0});
    CHECK_THROWS_AS((void)K.block_ball_retraction(std::vector<double>{5.0, 0.0, 0.0}, 2),
                    std::domain_error);

    // compose with the hull retraction so locally perturbed samples stay legal
    VecMap m = [&K](const std::vector<double>& x) {
        return K.block_ball_retraction(K.retract(x), 2, 1e-6);
    };
    PairSampler hull_pairs;
    hull_pairs.draw = [&K](Rng& rng) { return K.sample_hull(rng); };
    auto rep = estimate_lipschitz(s, m, hull_pairs, 20000, 11);
    CHECK(rep.estimate <= 6.0 + 1e-6);
}

TEST_CASE("rescaled retraction family") {
    BlockSpace s = BlockSpace::ones(3, PNorm::Two, PNorm::Two);
    DiamondCompact K(s, default_schedule(3), 3);
    auto R = K.retraction_map();
    auto R3 = rescale_retraction(R, 3.0);
    Rng rng(47);
    for (int rep = 0; rep < 100; ++rep) {
        auto x = s.sample_box(rng, 2.0);
        // R_n(n x) = n R(x), so quotients are preserved under scaling
        auto lhs = R3(vec_scale(x, 3.0));
        auto rhs = vec_scale(R(x), 3.0);
        for (std::size_t i = 0; i < lhs.size(); ++i)
            CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-12));
        // fixes 3K pointwise up to the rescaling round trip
        auto y = vec_scale(K.sample_hull(rng), 3.0);
        auto ry = R3(y);
        for (std::size_t i = 0; i < y.size(); ++i)
            CHECK(ry[i] == doctest::Approx(y[i]).epsilon(1e-12));
    }
    auto R1 = rescale_retraction(R, 1.0);
    auto z = s.sample_box(rng, 1.5);
    CHECK(R1(z) == R(z));
}

TEST_CASE("schedule budgets cap the retraction constant") {
    // one-dimensional blocks: (1 + delta)-Lipschitz
    for (PNorm p : {PNorm::One, PNorm::Two}) {
        BlockSpace s = BlockSpace::ones(8, p, p);
        DiamondCompact K(s, schedule_for_delta(0.5, 8), 8);
        auto rep = estimate_lipschitz(s, K.retraction_map(), K.seam_pair_sampler(2.0), 20000, 13);
        CHECK(rep.estimate <= 1.5 + 1e-6);
    }
    // genuine blocks: 5 (1 + delta)
    BlockSpace s2({2, 2, 3},
                  {BlockNorm::p(PNorm::Two), BlockNorm::p(PNorm::Two), BlockNorm::p(PNorm::Two)},
                  PNorm::Two);
    DiamondCompact K2(s2, schedule_for_delta(0.5, 3), 3);
    auto rep2 = estimate_lipschitz(s2, K2.retraction_map(), K2.seam_pair_sampler(2.0), 20000, 13);
    CHECK(rep2.estimate <= 7.5 + 1e-6);
}

TEST_CASE("factor map quotient bounds per stage") {
    BlockSpace s = BlockSpace::ones(6, PNorm::One, PNorm::One);
    auto sched = default_schedule(6);
    DiamondCompact K(s, sched, 6);
    Rng rng(53);
    for (int j = 2; j <= 6; ++j) {
        const double seam = sched.r[j - 1] * sched.A[j - 2] / sched.r[j - 2];
        for (int rep = 0; rep < 400; ++rep) {
            auto x = s.truncate(s.sample_box(rng, 0.8), j);
            auto y = s.truncate(s.sample_box(rng, 0.8), j);
            const double dist = s.distance(x, y);
            if (dist < 1e-9) continue;
            const double gx = K.gauge_prefix(x, j);
            const double gy = K.gauge_prefix(y, j);
            auto fx = K.peel_stage(x, j, j);
            auto fy = K.peel_stage(y, j, j);
            const double q = s.distance(fx, fy) / dist;
            if (gx <= 1.0 && gy <= 1.0) {
                CHECK(q <= 5.0 + seam + 1e-9);
            } else if (gx > 1.0 || gy > 1.0) {
                CHECK(q <= 5.0 + seam + 1e-9);
            }
        }
    }
}
