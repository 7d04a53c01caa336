#pragma once

#include <span>
#include <vector>

#include "retractlab/block_space.hpp"
#include "retractlab/estimators.hpp"
#include "retractlab/schedule.hpp"

namespace retractlab {

// The hull of the scaled block balls r_1 B_1, ..., r_N B_N, together with the
// Lipschitz retraction that peels surplus block mass one stage at a time.
//
// Membership is measured by the Minkowski gauge
//     gauge(x) = sum_{i<=N} ||x_i|| / r_i,
// which is exactly 1 on the boundary of the hull. Stage m of the retraction
// keeps x when the first m blocks fit the budget, drops to the (m-1)-block
// truncation when the earlier blocks already exhaust it, and otherwise clips
// block m to the leftover radius
//     stage_radius(x, m) = r_m (1 - sum_{i<m} ||x_i|| / r_i).
class DiamondCompact {
public:
    DiamondCompact(const BlockSpace& space, RadiiSchedule schedule, int depth = -1);

    const BlockSpace& space() const { return *space_; }
    const RadiiSchedule& schedule() const { return sched_; }
    int depth() const { return depth_; }
    long clip_fallbacks() const { return clip_fallbacks_; }

    // Partial gauge over the first n blocks; gauge(x) uses all of them.
    double gauge_prefix(std::span<const double> x, int n) const;
    double gauge(std::span<const double> x) const { return gauge_prefix(x, depth_); }

    // Membership: gauge at most 1 + tol and no mass beyond the hull's depth.
    bool contains(std::span<const double> x, double tol = 1e-9) const;

    // Leftover radius for block m (1-based). Constant r_1 for m = 1.
    double stage_radius(std::span<const double> x, int m) const;

    // One peeling stage F_{n,m}. Defined on points supported on the first m
    // blocks or inside the hull; throws std::domain_error otherwise. Ties
    // (budget exactly 1) keep the point.
    std::vector<double> peel_stage(std::span<const double> x, int n, int m) const;

    // The full retraction onto the depth-n hull in closed form: find the last
    // block whose predecessors fit the budget, truncate behind it and clip it
    // to the leftover radius. Values of points inside the hull are returned
    // unchanged.
    std::vector<double> retract(std::span<const double> x) const;

    // Same map as the stage-by-stage composition; used to cross-check.
    std::vector<double> retract_by_stages(std::span<const double> x) const;

    // Retraction of the hull onto the single scaled block ball r_n B_n:
    // take the block-n component, then project it radially to radius r_n.
    // Requires x in the hull (tolerance `tol`).
    std::vector<double> block_ball_retraction(std::span<const double> x, int n,
                                              double tol = 1e-9) const;

    // Hull samplers. sample_hull draws a convex combination of block-ball
    // points with gauge <= shrink; sample_boundary places it on the gauge = 1
    // shell up to rounding; sample_extreme returns r_k times a block-sphere
    // point (the extreme directions of the hull).
    std::vector<double> sample_hull(Rng& rng, double shrink = 1.0) const;
    std::vector<double> sample_boundary(Rng& rng) const;
    std::vector<double> sample_extreme(Rng& rng) const;

    // Pair sampler preloaded with the prefix-gauge shells of this hull.
    PairSampler seam_pair_sampler(double box_halfwidth) const;

    VecMap retraction_map() const;

private:
    const BlockSpace* space_;
    RadiiSchedule sched_;
    int depth_;
    mutable long clip_fallbacks_ = 0;
};

// x -> scale * R(x / scale); scale >= 1 keeps the Lipschitz constant and
// retracts onto the dilated set.
VecMap rescale_retraction(const VecMap& retraction, double scale);

}  // namespace retractlab
