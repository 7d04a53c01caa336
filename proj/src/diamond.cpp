#include "retractlab/diamond.hpp"

#include <cmath>
#include <stdexcept>

namespace retractlab {

namespace {
constexpr double kZeroBlock = 1e-14;  // treat block mass below this as zero when clipping
}

DiamondCompact::DiamondCompact(const BlockSpace& space, RadiiSchedule schedule, int depth)
    : space_(&space), sched_(std::move(schedule)) {
    sched_.validate();
    depth_ = depth < 0 ? std::min(space.block_count(), sched_.depth()) : depth;
    if (depth_ < 1 || depth_ > space.block_count() || depth_ > sched_.depth())
        throw std::invalid_argument("hull depth must fit both the space and the schedule");
}

double DiamondCompact::gauge_prefix(std::span<const double> x, int n) const {
    if (n < 0 || n > depth_) throw std::out_of_range("gauge prefix out of range");
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += space_->block_norm(i, x) / sched_.r[static_cast<std::size_t>(i)];
    return s;
}

bool DiamondCompact::contains(std::span<const double> x, double tol) const {
    if (gauge(x) > 1.0 + tol) return false;
    for (int i = depth_; i < space_->block_count(); ++i)
        if (space_->block_norm(i, x) > tol) return false;
    return true;
}

double DiamondCompact::stage_radius(std::span<const double> x, int m) const {
    if (m < 1 || m > depth_) throw std::out_of_range("stage index out of range");
    if (m == 1) return sched_.r[0];
    return sched_.r[static_cast<std::size_t>(m - 1)] * (1.0 - gauge_prefix(x, m - 1));
}

std::vector<double> DiamondCompact::peel_stage(std::span<const double> x, int n, int m) const {
    if (n < 1 || n > depth_ || m < 1 || m > n) throw std::out_of_range("stage indices out of range");
    // domain: within the first n blocks, and supported on the first m blocks
    // or inside the depth-n hull
    bool beyond_n_zero = true;
    for (int i = n; i < space_->block_count() && beyond_n_zero; ++i)
        if (space_->block_norm(i, x) > 0.0) beyond_n_zero = false;
    bool supported = beyond_n_zero;
    for (int i = m; i < n && supported; ++i)
        if (space_->block_norm(i, x) > 0.0) supported = false;
    if (!supported && !(beyond_n_zero && gauge_prefix(x, n) <= 1.0 + 1e-9))
        throw std::domain_error("peel stage applied outside its domain");

    const double before = gauge_prefix(x, m - 1);
    const double with_m = before + space_->block_norm(m - 1, x) / sched_.r[static_cast<std::size_t>(m - 1)];
    if (with_m <= 1.0) return std::vector<double>(x.begin(), x.end());
    if (before >= 1.0) return space_->truncate(x, m - 1);

    // clip block m to the leftover radius
    std::vector<double> out = space_->truncate(x, m - 1);
    const double bm = space_->block_norm(m - 1, x);
    const double leftover = sched_.r[static_cast<std::size_t>(m - 1)] * (1.0 - before);
    if (bm < kZeroBlock) {
        ++clip_fallbacks_;  // continuity limit: vanishing block with leftover budget
        return out;
    }
    const double t = leftover / bm;
    const int off = space_->block_offset(m - 1);
    for (int k = 0; k < space_->block_dim(m - 1); ++k) out[static_cast<std::size_t>(off + k)] = x[static_cast<std::size_t>(off + k)] * t;
    return out;
}

std::vector<double> DiamondCompact::retract(std::span<const double> x) const {
    const int n = depth_;
    // last block whose predecessors fit the budget: max {k : sum_{i<k} <= 1}
    int active = n + 1;
    double before = 0.0;  // prefix mass strictly before `active`
    double s = 0.0;
    for (int k = 1; k <= n; ++k) {
        double nk = space_->block_norm(k - 1, x) / sched_.r[static_cast<std::size_t>(k - 1)];
        if (s + nk > 1.0) {
            active = k;
            before = s;
            break;
        }
        s += nk;
    }
    if (active == n + 1) return space_->truncate(x, n);

    std::vector<double> out = space_->truncate(x, active - 1);
    const double bm = space_->block_norm(active - 1, x);
    const double leftover = sched_.r[static_cast<std::size_t>(active - 1)] * (1.0 - before);
    if (bm < kZeroBlock) {
        ++clip_fallbacks_;
        return out;
    }
    const double t = leftover / bm;
    const int off = space_->block_offset(active - 1);
    for (int k = 0; k < space_->block_dim(active - 1); ++k)
        out[static_cast<std::size_t>(off + k)] = x[static_cast<std::size_t>(off + k)] * t;
    return out;
}

std::vector<double> DiamondCompact::retract_by_stages(std::span<const double> x) const {
    std::vector<double> y = space_->truncate(x, depth_);
    for (int m = depth_; m >= 1; --m) y = peel_stage(y, depth_, m);
    return y;
}

std::vector<double> DiamondCompact::block_ball_retraction(std::span<const double> x, int n,
                                                          double tol) const {
    if (n < 1 || n > depth_) throw std::out_of_range("block index out of range");
    if (!contains(x, tol)) throw std::domain_error("block-ball retraction is only defined on the hull");
    std::vector<double> comp = space_->block_component(x, n - 1);
    const double bn = space_->block_norm(n - 1, comp);
    const double rn = sched_.r[static_cast<std::size_t>(n - 1)];
    if (bn <= rn) return comp;
    const double t = rn / bn;
    for (auto& v : comp) v *= t;
    return comp;
}

std::vector<double> DiamondCompact::sample_hull(Rng& rng, double shrink) const {
    std::vector<double> w(static_cast<std::size_t>(depth_));
    rng.fill_simplex(w);
    std::vector<double> x(static_cast<std::size_t>(space_->dim()), 0.0);
    for (int k = 0; k < depth_; ++k) {
        auto p = space_->sample_block_ball(rng, k, sched_.r[static_cast<std::size_t>(k)]);
        vec_axpy(x, shrink * w[static_cast<std::size_t>(k)], p);
    }
    return x;
}

std::vector<double> DiamondCompact::sample_boundary(Rng& rng) const {
    std::vector<double> w(static_cast<std::size_t>(depth_));
    rng.fill_simplex(w);
    std::vector<double> x(static_cast<std::size_t>(space_->dim()), 0.0);
    for (int k = 0; k < depth_; ++k) {
        auto p = space_->sample_block_sphere(rng, k, sched_.r[static_cast<std::size_t>(k)]);
        vec_axpy(x, w[static_cast<std::size_t>(k)], p);
    }
    return x;
}

std::vector<double> DiamondCompact::sample_extreme(Rng& rng) const {
    int k = rng.uniform_int(1, depth_);
    return space_->sample_block_sphere(rng, k - 1, sched_.r[static_cast<std::size_t>(k - 1)]);
}

PairSampler DiamondCompact::seam_pair_sampler(double box_halfwidth) const {
    PairSampler s = box_pair_sampler(*space_, box_halfwidth);
    s.shell_fraction = 0.25;
    for (int m = 1; m <= depth_; ++m) {
        s.shell_gauges.push_back(
            [this, m](const std::vector<double>& x) { return gauge_prefix(x, m); });
    }
    return s;
}

VecMap DiamondCompact::retraction_map() const {
    return [this](const std::vector<double>& x) { return retract(x); };
}

VecMap rescale_retraction(const VecMap& retraction, double scale) {
    if (scale < 1.0) throw std::invalid_argument("rescaling factor must be >= 1");
    return [retraction, scale](const std::vector<double>& x) {
        std::vector<double> y = vec_scale(x, 1.0 / scale);
        y = retraction(y);
        for (auto& v : y) v *= scale;
        return y;
    };
}

}  // namespace retractlab
