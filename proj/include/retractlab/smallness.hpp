#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "retractlab/block_space.hpp"
#include "retractlab/diamond.hpp"
#include "retractlab/schedule.hpp"

namespace retractlab {

// Ordered linearly independent vectors e_1..e_N spanning the nested subspaces
// E_n = span{e_1..e_n}. Independence is enforced with a rank check at
// construction.
class FundamentalSequence {
public:
    explicit FundamentalSequence(std::vector<std::vector<double>> vectors);

    // The first `count` coordinate vectors of the space.
    static FundamentalSequence standard(const BlockSpace& space, int count);

    int length() const { return static_cast<int>(vectors_.size()); }
    int dim() const { return vectors_.empty() ? 0 : static_cast<int>(vectors_.front().size()); }
    const std::vector<double>& vec(int i) const;  // 0-based

    // Frame e_1..e_n of E_n.
    std::vector<std::vector<double>> prefix_frame(int n) const;

    // True when e_1..e_n are exactly the first n coordinate vectors. This is
    // what unlocks the closed-form radius/height paths for block-ball hulls.
    bool standard_prefix(int n) const { return n <= standard_prefix_len_; }

private:
    std::vector<std::vector<double>> vectors_;
    int standard_prefix_len_ = 0;
};

// A bounded convex set presented through a membership oracle. `outer_radius`
// bounds the ambient norm over the set and brackets the line searches. The
// sampler is only needed for the numeric height path. `hull` is set when the
// set is one of our block-ball hulls, which makes the closed forms available.
struct BoundedSet {
    const BlockSpace* space = nullptr;
    std::function<bool(std::span<const double>)> member;
    double outer_radius = 0.0;
    std::function<std::vector<double>(Rng&)> sample;  // optional
    const DiamondCompact* hull = nullptr;
};

BoundedSet bounded_set_from_hull(const DiamondCompact& hull);

struct SmallnessSearch {
    int directions = 128;            // sphere directions per center
    int centers = 8;                 // random center candidates besides 0
    int bisection_steps = 60;
    std::size_t height_samples = 2048;
    std::uint64_t seed = 1;
    int refine_factor = 4;           // numeric PASS rows are re-checked at this multiple
};

// Index maps sigma are passed as the values sigma(1)..sigma(depth); they must
// be >= 1 and strictly increasing.
std::vector<int> identity_sigma(int depth);

// 1 / (2 m^2 ((1 + 2/eps)^m + 2)) evaluated at m = sigma(n). eps in (0, 1].
double smallness_bound_at(int sigma_n, double epsilon);
double smallness_bound(int n, double epsilon, const std::vector<int>& sigma);

// floor((1 + 2/eps)^sigma(n)); throws std::overflow_error past 1e9.
long long phi_at(int sigma_n, double epsilon);
long long phi(int n, double epsilon, const std::vector<int>& sigma);

// Largest lower estimate of the radius of an ambient-norm ball inside
// set ∩ E_n found by the center/direction search. Centers are searched in E_n
// only: a candidate ball must lie inside E_n anyway, and for a center outside
// E_n the intersection with E_n is a smaller ball, so restricting centers
// loses nothing once the ball is read inside E_n. For a symmetric hull the
// center 0 is optimal (if the ball around c fits, so does the one around -c,
// and by convexity the one around 0), and block p-sum models evaluate in
// closed form: the gauge's extreme functionals have ambient dual norm
// ||(1/r_i)_{i in blocks meeting E_n}||_q with q dual to the ambient
// exponent, so the radius is the reciprocal of that.
double inner_radius(const BoundedSet& set, const FundamentalSequence& beta, int n,
                    const SmallnessSearch& cfg = {});

// sup of d(x, E_n) over the set. Closed form for block p-sum hulls with the
// standard sequence (the farthest mass sits on the first block that leaves
// E_n, at distance its radius); otherwise a sampled maximum over the set's
// sampler, with distances computed by span minimization (orthogonal
// projection when the model is Euclidean).
double height(const BoundedSet& set, const FundamentalSequence& beta, int n,
              const SmallnessSearch& cfg = {});

struct SmallnessRecord {
    int n = 0;
    int sigma_n = 0;
    double inner_radius = 0.0;
    double height = 0.0;
    double ratio = 0.0;
    double bound = 0.0;
    bool pass = false;
    bool analytic = false;  // closed-form row, no sampling involved
};

struct SmallnessCertificate {
    double epsilon = 0.0;
    std::vector<int> sigma;
    std::vector<SmallnessRecord> rows;
    bool verdict = false;
    std::string note;

    std::string to_text() const;
};

// Row n checks 0 < h_{sigma(n)} / r_{sigma(n)} <= bound(sigma(n)). Numeric
// estimates converge from the safe side under refinement (more directions
// only lower the radius estimate at the searched centers, more samples only
// raise the height estimate), so a numeric PASS is re-verified at
// refine_factor times the sampling before it is emitted; the refined values
// are the ones recorded. Degenerate rows (radius 0, or height 0 so the ratio
// is not strictly positive) are reported as FAIL, never thrown.
SmallnessCertificate check_small(const BoundedSet& set, const FundamentalSequence& beta,
                                 double epsilon, const std::vector<int>& sigma, int depth,
                                 const SmallnessSearch& cfg = {});

// Radii ladder whose hull passes the certificate: each ratio r_{m+1}/r_m is
// half of min(q_{m+1}, bound(m)) with q the standard shrink caps; the halving
// leaves room for the inner radius sitting slightly below r_m, so the
// 1-D-block closed forms give h_m/r_m^inner <= bound(m) at every m <= depth
// for any ambient exponent. Returns depth+1 radii so that row `depth` still
// has mass beyond it.
RadiiSchedule small_schedule(double epsilon, int depth);

}  // namespace retractlab
