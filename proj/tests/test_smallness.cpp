#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "retractlab/smallness.hpp"

using namespace retractlab;

namespace {

struct Fixture {
    BlockSpace space;
    DiamondCompact hull;
    BoundedSet set;
    FundamentalSequence beta;

    Fixture(BlockSpace s, RadiiSchedule sched, int depth)
        : space(std::move(s)),
          hull(space, std::move(sched), depth),
          set(bounded_set_from_hull(hull)),
          beta(FundamentalSequence::standard(space, space.dim())) {}
};

}  // namespace

TEST_CASE("inner radius closed forms on a two block hull") {
    Fixture l1(BlockSpace::ones(2, PNorm::One, PNorm::One), schedule_from_radii({1.0, 0.25}), 2);
    CHECK(inner_radius(l1.set, l1.beta, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(inner_radius(l1.set, l1.beta, 2) == doctest::Approx(0.25).epsilon(1e-14));

    Fixture l2(BlockSpace::ones(2, PNorm::Two, PNorm::Two), schedule_from_radii({1.0, 0.25}), 2);
    CHECK(inner_radius(l2.set, l2.beta, 2) ==
          doctest::Approx(1.0 / std::sqrt(17.0)).epsilon(1e-14));
}

TEST_CASE("inner radius of the default hull") {
    Fixture l1(BlockSpace::ones(8, PNorm::One, PNorm::One), default_schedule(8), 8);
    CHECK(inner_radius(l1.set, l1.beta, 2) == doctest::Approx(1.0 / 16.0).epsilon(1e-14));

    Fixture l2(BlockSpace::ones(8, PNorm::Two, PNorm::Two), default_schedule(8), 8);
    CHECK(inner_radius(l2.set, l2.beta, 2) ==
          doctest::Approx(1.0 / std::sqrt(257.0)).epsilon(1e-14));
}

TEST_CASE("height equals the next radius and vanishes at full depth") {
    Fixture f(BlockSpace::ones(4, PNorm::One, PNorm::One), default_schedule(4), 4);
    const auto& r = f.hull.schedule().r;
    for (int n = 1; n < 4; ++n)
        CHECK(height(f.set, f.beta, n) == doctest::Approx(r[n]).epsilon(1e-14));
    CHECK(height(f.set, f.beta, 4) == 0.0);
}

TEST_CASE("radius and height scale linearly with the radii") {
    std::vector<double> base{1.0, 0.25, 0.01};
    std::vector<double> twice{2.0, 0.5, 0.02};
    Fixture a(BlockSpace::ones(3, PNorm::Two, PNorm::Two), schedule_from_radii(base), 3);
    Fixture b(BlockSpace::ones(3, PNorm::Two, PNorm::Two), schedule_from_radii(twice), 3);
    for (int n = 1; n <= 2; ++n) {
        CHECK(inner_radius(b.set, b.beta, n) ==
              doctest::Approx(2.0 * inner_radius(a.set, a.beta, n)).epsilon(1e-14));
        CHECK(height(b.set, b.beta, n) ==
              doctest::Approx(2.0 * height(a.set, a.beta, n)).epsilon(1e-14));
    }
}

TEST_CASE("numeric search agrees with the closed form") {
    // same geometry twice: sup-norm blocks written as p-norm blocks (closed
    // form available) and as functional tables (numeric search only)
    FunctionalTable box2;
    box2.rows = {{1.0, 0.0}, {0.0, 1.0}};
    std::vector<double> radii{1.0, 0.25};

    BlockSpace analytic({2, 2}, {BlockNorm::p(PNorm::Inf), BlockNorm::p(PNorm::Inf)}, PNorm::Inf);
    BlockSpace numeric({2, 2}, {BlockNorm::table(box2), BlockNorm::table(box2)}, PNorm::Inf);

    DiamondCompact ha(analytic, schedule_from_radii(radii), 2);
    DiamondCompact hn(numeric, schedule_from_radii(radii), 2);
    auto sa = bounded_set_from_hull(ha);
    auto sn = bounded_set_from_hull(hn);
    FundamentalSequence ba = FundamentalSequence::standard(analytic, 4);
    FundamentalSequence bn = FundamentalSequence::standard(numeric, 4);

    SmallnessSearch cfg;
    cfg.directions = 256;
    cfg.height_samples = 4096;
    cfg.seed = 7;
    SmallnessSearch fine = cfg;
    fine.directions *= 4;
    fine.height_samples *= 4;
    for (int n = 2; n <= 3; ++n) {
        const double ra = inner_radius(sa, ba, n, cfg);
        const double rn = inner_radius(sn, bn, n, cfg);
        CHECK(rn == doctest::Approx(ra).epsilon(5e-2));
        // refinement can only shrink the radius estimate at the searched centers
        CHECK(inner_radius(sn, bn, n, fine) <= rn + 1e-12);
        const double ha_n = height(sa, ba, n, cfg);
        const double hn_n = height(sn, bn, n, cfg);
        CHECK(hn_n == doctest::Approx(ha_n).epsilon(5e-2));
        CHECK(hn_n <= ha_n + 1e-9);  // the sampled sup estimates from below
        // and refinement can only raise it
        CHECK(height(sn, bn, n, fine) >= hn_n - 1e-12);
    }
}

TEST_CASE("decay bounds") {
    CHECK(smallness_bound_at(1, 1.0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(smallness_bound_at(1, 0.5) == doctest::Approx(1.0 / 14.0).epsilon(1e-15));
    for (int m = 1; m < 12; ++m)
        CHECK(smallness_bound_at(m + 1, 0.5) < smallness_bound_at(m, 0.5));
    // shrinking eps only tightens the bound
    CHECK(smallness_bound_at(3, 0.25) < smallness_bound_at(3, 0.5));
    CHECK_THROWS_AS((void)smallness_bound_at(1, 0.0), std::domain_error);
    CHECK_THROWS_AS((void)smallness_bound_at(1, 1.5), std::domain_error);
    CHECK_THROWS_AS((void)smallness_bound_at(0, 0.5), std::invalid_argument);
}

TEST_CASE("net cardinality floor") {
    CHECK(phi_at(2, 1.0) == 9);
    CHECK(phi_at(1, 0.5) == 5);
    long long prev = 0;
    for (int m = 1; m <= 12; ++m) {
        long long cur = phi_at(m, 1.0);
        CHECK(cur >= prev);
        prev = cur;
    }
    CHECK_THROWS_AS((void)phi_at(60, 1.0), std::overflow_error);
    std::vector<int> sigma{2, 4};
    CHECK(phi(1, 1.0, sigma) == 9);
    CHECK(phi(2, 1.0, sigma) == 81);
}

TEST_CASE("sigma maps") {
    auto id = identity_sigma(3);
    CHECK(id == std::vector<int>{1, 2, 3});
    CHECK(smallness_bound(2, 0.5, id) == smallness_bound_at(2, 0.5));

    Fixture f(BlockSpace::ones(3, PNorm::One, PNorm::One), small_schedule(0.5, 3), 3);
    CHECK_THROWS_AS((void)check_small(f.set, f.beta, 0.5, std::vector<int>{1, 2}, 3),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)check_small(f.set, f.beta, 0.5, std::vector<int>{2, 2, 3}, 3),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)check_small(f.set, f.beta, 0.5, std::vector<int>{0, 1, 2}, 3),
                    std::invalid_argument);
}

TEST_CASE("the tuned ladder passes at every row") {
    for (PNorm p : {PNorm::One, PNorm::Two}) {
        Fixture f(BlockSpace::ones(6, p, p), small_schedule(0.5, 5), 6);
        auto cert = check_small(f.set, f.beta, 0.5, identity_sigma(5), 5);
        CHECK(cert.verdict);
        REQUIRE(cert.rows.size() == 5);
        for (const auto& row : cert.rows) {
            CHECK(row.pass);
            CHECK(row.analytic);
            CHECK(row.ratio > 0.0);
            CHECK(row.ratio <= row.bound);
            CHECK(row.ratio == doctest::Approx(row.height / row.inner_radius).epsilon(1e-12));
        }
        auto text = cert.to_text();
        CHECK(text.find("PASS") != std::string::npos);
        CHECK(text.find("FAIL") == std::string::npos);
    }
}

TEST_CASE("the default ladder decays too slowly past the first row") {
    Fixture f(BlockSpace::ones(6, PNorm::One, PNorm::One), default_schedule(6), 6);
    auto one = check_small(f.set, f.beta, 0.5, identity_sigma(1), 1);
    CHECK(one.verdict);
    CHECK(one.rows.at(0).ratio == doctest::Approx(1.0 / 16.0).epsilon(1e-12));

    auto cert = check_small(f.set, f.beta, 0.5, identity_sigma(4), 4);
    CHECK_FALSE(cert.verdict);
    CHECK(cert.rows.at(0).pass);
    for (std::size_t i = 1; i < cert.rows.size(); ++i) CHECK_FALSE(cert.rows[i].pass);
    // the failure is not an artifact of eps: the widest bound already loses
    auto wide = check_small(f.set, f.beta, 1.0, identity_sigma(2), 2);
    CHECK_FALSE(wide.rows.at(1).pass);
    CHECK(wide.rows.at(1).ratio == doctest::Approx(1.0 / 48.0).epsilon(1e-12));
    CHECK(wide.rows.at(1).bound == doctest::Approx(1.0 / 88.0).epsilon(1e-12));
}

TEST_CASE("slow ladders fail and degenerate rows fail without throwing") {
    Fixture slow(BlockSpace::ones(4, PNorm::One, PNorm::One),
                 schedule_from_radii({1.0, 0.5, 1.0 / 3.0, 0.25}), 4);
    auto cert = check_small(slow.set, slow.beta, 0.5, identity_sigma(3), 3);
    CHECK_FALSE(cert.verdict);
    for (const auto& row : cert.rows) CHECK_FALSE(row.pass);

    // row at full depth has height 0: ratio not strictly positive
    Fixture flat(BlockSpace::ones(2, PNorm::One, PNorm::One), small_schedule(0.5, 1), 2);
    auto deep = check_small(flat.set, flat.beta, 0.5, identity_sigma(2), 2);
    CHECK(deep.rows.at(0).pass);
    CHECK_FALSE(deep.rows.at(1).pass);
    CHECK(deep.rows.at(1).height == 0.0);
    CHECK_FALSE(deep.verdict);
}

TEST_CASE("certificates are scale invariant") {
    auto base = small_schedule(0.5, 4);
    std::vector<double> doubled;
    for (double r : base.r) doubled.push_back(2.0 * r);
    Fixture a(BlockSpace::ones(5, PNorm::Two, PNorm::Two), base, 5);
    Fixture b(BlockSpace::ones(5, PNorm::Two, PNorm::Two), schedule_from_radii(doubled), 5);
    auto ca = check_small(a.set, a.beta, 0.5, identity_sigma(4), 4);
    auto cb = check_small(b.set, b.beta, 0.5, identity_sigma(4), 4);
    CHECK(ca.verdict == cb.verdict);
    REQUIRE(ca.rows.size() == cb.rows.size());
    for (std::size_t i = 0; i < ca.rows.size(); ++i) {
        CHECK(cb.rows[i].ratio == doctest::Approx(ca.rows[i].ratio).epsilon(1e-12));
        CHECK(cb.rows[i].inner_radius ==
              doctest::Approx(2.0 * ca.rows[i].inner_radius).epsilon(1e-12));
        CHECK(cb.rows[i].pass == ca.rows[i].pass);
    }
}

TEST_CASE("sparse sigma skips rows") {
    Fixture f(BlockSpace::ones(7, PNorm::One, PNorm::One), small_schedule(1.0, 6), 7);
    std::vector<int> sigma{2, 4};
    auto cert = check_small(f.set, f.beta, 1.0, sigma, 2);
    REQUIRE(cert.rows.size() == 2);
    CHECK(cert.rows[0].sigma_n == 2);
    CHECK(cert.rows[1].sigma_n == 4);
    CHECK(cert.rows[0].bound == doctest::Approx(smallness_bound_at(2, 1.0)).epsilon(1e-15));
    CHECK(cert.verdict);
}

TEST_CASE("fundamental sequences") {
    BlockSpace s = BlockSpace::ones(3, PNorm::Two, PNorm::Two);
    auto beta = FundamentalSequence::standard(s, 3);
    CHECK(beta.length() == 3);
    CHECK(beta.standard_prefix(3));
    CHECK(beta.vec(1) == std::vector<double>{0.0, 1.0, 0.0});
    CHECK(beta.prefix_frame(2).size() == 2);

    // a rotated frame is legal but not a standard prefix past the match
    FundamentalSequence rot({{1.0, 0.0, 0.0}, {1.0, 1.0, 0.0}, {0.0, 0.0, 1.0}});
    CHECK(rot.standard_prefix(1));
    CHECK_FALSE(rot.standard_prefix(2));

    CHECK_THROWS_AS(FundamentalSequence({{1.0, 2.0}, {2.0, 4.0}}), std::invalid_argument);
}
