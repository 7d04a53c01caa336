#include "retractlab/smallness.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "retractlab/minimize.hpp"

namespace retractlab {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void validate_sigma(const std::vector<int>& sigma, int depth) {
    if (depth < 1) throw std::invalid_argument("depth must be at least 1");
    if (static_cast<int>(sigma.size()) < depth)
        throw std::invalid_argument("sigma must cover the requested depth");
    int prev = 0;
    for (int i = 0; i < depth; ++i) {
        if (sigma[static_cast<std::size_t>(i)] <= prev)
            throw std::invalid_argument("sigma must be strictly increasing and at least 1");
        prev = sigma[static_cast<std::size_t>(i)];
    }
}

void validate_epsilon(double epsilon) {
    if (!(epsilon > 0.0) || epsilon > 1.0)
        throw std::domain_error("epsilon must lie in (0, 1]");
}

// (1 + 2/eps)^m by repeated multiplication, exact for exactly representable
// bases and the small exponents used in practice.
double growth_power(int m, double epsilon) {
    const double base = 1.0 + 2.0 / epsilon;
    double p = 1.0;
    for (int i = 0; i < m; ++i) p *= base;
    return p;
}

bool closed_form_applies(const BoundedSet& set, const FundamentalSequence& beta, int n) {
    if (set.hull == nullptr || !beta.standard_prefix(n)) return false;
    const BlockSpace& s = set.hull->space();
    for (int k = 0; k < s.block_count(); ++k)
        if (!s.block(k).is_p()) return false;
    return true;
}

PNorm dual_exponent(PNorm p) {
    switch (p) {
        case PNorm::One: return PNorm::Inf;
        case PNorm::Inf: return PNorm::One;
        case PNorm::Two: return PNorm::Two;
    }
    throw std::logic_error("unreachable");
}

double qnorm(const std::vector<double>& w, PNorm q) {
    double s = 0.0;
    switch (q) {
        case PNorm::One:
            for (double v : w) s += std::abs(v);
            return s;
        case PNorm::Two:
            for (double v : w) s += v * v;
            return std::sqrt(s);
        case PNorm::Inf:
            for (double v : w) s = std::max(s, std::abs(v));
            return s;
    }
    throw std::logic_error("unreachable");
}

// Unit direction in span(e_1..e_n), ambient norm one. Empty when the gaussian
// draw degenerates (never in practice).
std::vector<double> span_direction(const BlockSpace& space, const FundamentalSequence& beta,
                                   int n, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(space.dim()), 0.0);
    for (int i = 0; i < n; ++i) vec_axpy(v, rng.normal(), beta.vec(i));
    double nv = space.ambient_norm(v);
    if (nv < 1e-12) return {};
    for (auto& c : v) c /= nv;
    return v;
}

// Exit time sup{t : c + t d in set} for a convex set containing c, bracketed
// by the outer radius. Returns the inner endpoint of the final bisection
// bracket, so the reported ball never pokes outside the tested memberships.
double exit_time(const BoundedSet& set, const std::vector<double>& c,
                 const std::vector<double>& d, int steps) {
    double lo = 0.0;
    double hi = 2.0 * set.outer_radius + 1.0;
    std::vector<double> probe(c.size());
    auto at = [&](double t) {
        probe = c;
        vec_axpy(probe, t, d);
        return set.member(probe);
    };
    if (at(hi)) return hi;  // outer radius bound violated by the caller
    for (int i = 0; i < steps; ++i) {
        double mid = 0.5 * (lo + hi);
        if (at(mid)) lo = mid;
        else hi = mid;
    }
    return lo;
}

// Distance from x to span(e_1..e_n) in the ambient norm.
double span_distance(const BlockSpace& space, const FundamentalSequence& beta, int n,
                     const std::vector<double>& x, std::uint64_t seed) {
    bool euclidean = space.ambient_rule() == PNorm::Two;
    for (int k = 0; euclidean && k < space.block_count(); ++k)
        euclidean = space.block(k).is_p() && space.block(k).pkind() == PNorm::Two;
    if (euclidean) {
        Eigen::MatrixXd E(space.dim(), n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < space.dim(); ++i)
                E(i, j) = beta.vec(j)[static_cast<std::size_t>(i)];
        Eigen::VectorXd xv(space.dim());
        for (int i = 0; i < space.dim(); ++i) xv(i) = x[static_cast<std::size_t>(i)];
        Eigen::VectorXd resid = xv - E * E.colPivHouseholderQr().solve(xv);
        return resid.norm();
    }
    MinimizeConfig cfg;
    cfg.iterations = 1200;
    cfg.starts = 2;
    cfg.seed = seed;
    return min_norm_over_span(ambient_norm_handle(space), x, beta.prefix_frame(n), -1.0, cfg).value;
}

}  // namespace

FundamentalSequence::FundamentalSequence(std::vector<std::vector<double>> vectors)
    : vectors_(std::move(vectors)) {
    if (vectors_.empty()) throw std::invalid_argument("fundamental sequence needs vectors");
    const std::size_t d = vectors_.front().size();
    if (d == 0) throw std::invalid_argument("fundamental sequence vectors must be nonempty");
    if (vectors_.size() > d)
        throw std::invalid_argument("more vectors than the dimension allows");
    for (const auto& v : vectors_)
        if (v.size() != d) throw std::invalid_argument("fundamental sequence vectors differ in dimension");

    Eigen::MatrixXd M(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(vectors_.size()));
    for (std::size_t j = 0; j < vectors_.size(); ++j)
        for (std::size_t i = 0; i < d; ++i)
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vectors_[j][i];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    lu.setThreshold(1e-10);
    if (lu.rank() < static_cast<Eigen::Index>(vectors_.size()))
        throw std::invalid_argument("fundamental sequence vectors are linearly dependent");

    for (std::size_t j = 0; j < vectors_.size(); ++j) {
        bool std_vec = true;
        for (std::size_t i = 0; i < d && std_vec; ++i)
            std_vec = vectors_[j][i] == (i == j ? 1.0 : 0.0);
        if (!std_vec) break;
        standard_prefix_len_ = static_cast<int>(j + 1);
    }
}

FundamentalSequence FundamentalSequence::standard(const BlockSpace& space, int count) {
    if (count < 1 || count > space.dim()) throw std::out_of_range("sequence length out of range");
    std::vector<std::vector<double>> vecs;
    for (int i = 0; i < count; ++i) {
        std::vector<double> e(static_cast<std::size_t>(space.dim()), 0.0);
        e[static_cast<std::size_t>(i)] = 1.0;
        vecs.push_back(std::move(e));
    }
    return FundamentalSequence(std::move(vecs));
}

const std::vector<double>& FundamentalSequence::vec(int i) const {
    if (i < 0 || i >= length()) throw std::out_of_range("sequence index out of range");
    return vectors_[static_cast<std::size_t>(i)];
}

std::vector<std::vector<double>> FundamentalSequence::prefix_frame(int n) const {
    if (n < 1 || n > length()) throw std::out_of_range("prefix length out of range");
    return {vectors_.begin(), vectors_.begin() + n};
}

BoundedSet bounded_set_from_hull(const DiamondCompact& hull) {
    BoundedSet set;
    set.space = &hull.space();
    set.member = [&hull](std::span<const double> x) { return hull.contains(x, 1e-12); };
    set.outer_radius = hull.schedule().r.front();
    set.sample = [&hull](Rng& rng) {
        double u = rng.uniform01();
        if (u < 0.5) return hull.sample_hull(rng);
        if (u < 0.75) return hull.sample_boundary(rng);
        return hull.sample_extreme(rng);
    };
    set.hull = &hull;
    return set;
}

std::vector<int> identity_sigma(int depth) {
    std::vector<int> s(static_cast<std::size_t>(depth));
    for (int i = 0; i < depth; ++i) s[static_cast<std::size_t>(i)] = i + 1;
    return s;
}

double smallness_bound_at(int sigma_n, double epsilon) {
    validate_epsilon(epsilon);
    if (sigma_n < 1) throw std::invalid_argument("sigma values must be at least 1");
    const double m = static_cast<double>(sigma_n);
    return 1.0 / (2.0 * m * m * (growth_power(sigma_n, epsilon) + 2.0));
}

double smallness_bound(int n, double epsilon, const std::vector<int>& sigma) {
    validate_sigma(sigma, n);
    return smallness_bound_at(sigma[static_cast<std::size_t>(n - 1)], epsilon);
}

long long phi_at(int sigma_n, double epsilon) {
    validate_epsilon(epsilon);
    if (sigma_n < 1) throw std::invalid_argument("sigma values must be at least 1");
    const double p = growth_power(sigma_n, epsilon);
    if (!(p <= 1e9)) throw std::overflow_error("witness dimension exceeds 1e9");
    return static_cast<long long>(std::floor(p));
}

long long phi(int n, double epsilon, const std::vector<int>& sigma) {
    validate_sigma(sigma, n);
    return phi_at(sigma[static_cast<std::size_t>(n - 1)], epsilon);
}

double inner_radius(const BoundedSet& set, const FundamentalSequence& beta, int n,
                    const SmallnessSearch& cfg) {
    if (set.space == nullptr || !set.member) throw std::invalid_argument("set needs a membership oracle");
    if (n < 1 || n > beta.length()) throw std::out_of_range("sequence index out of range");
    if (beta.dim() != set.space->dim()) throw std::invalid_argument("sequence dimension mismatch");
    const BlockSpace& space = *set.space;

    if (closed_form_applies(set, beta, n)) {
        const DiamondCompact& hull = *set.hull;
        int meeting = 0;
        while (meeting < space.block_count() && space.block_offset(meeting) < n) ++meeting;
        if (meeting > hull.depth()) return 0.0;  // a spanned block carries no mass
        std::vector<double> w;
        for (int k = 0; k < meeting; ++k)
            w.push_back(1.0 / hull.schedule().r[static_cast<std::size_t>(k)]);
        return 1.0 / qnorm(w, dual_exponent(space.ambient_rule()));
    }

    if (cfg.directions < 1) throw std::invalid_argument("direction count must be positive");
    const std::size_t dim = static_cast<std::size_t>(space.dim());
    const std::vector<double> origin(dim, 0.0);
    const bool origin_inside = set.member(origin);

    std::vector<std::vector<double>> centers;
    if (origin_inside) centers.push_back(origin);
    for (int k = 0; k < cfg.centers; ++k) {
        Rng rng(derive_seed(cfg.seed, 0x63650000u + static_cast<std::uint64_t>(k)));
        std::vector<double> c;
        if (origin_inside) {
            // random point on a chord through 0
            auto d = span_direction(space, beta, n, rng);
            if (d.empty()) continue;
            double t = exit_time(set, origin, d, cfg.bisection_steps);
            c = origin;
            vec_axpy(c, rng.uniform01() * t, d);
        } else {
            // membership-filtered draw from the coefficient box
            for (int attempt = 0; attempt < 200; ++attempt) {
                std::vector<double> cand(dim, 0.0);
                for (int i = 0; i < n; ++i)
                    vec_axpy(cand, rng.uniform(-set.outer_radius, set.outer_radius), beta.vec(i));
                if (set.member(cand)) {
                    c = std::move(cand);
                    break;
                }
            }
        }
        if (!c.empty()) centers.push_back(std::move(c));
    }
    if (centers.empty()) return 0.0;

    double best = 0.0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
        double rad = std::numeric_limits<double>::infinity();
        for (int j = 0; j < cfg.directions && rad > best; ++j) {
            Rng rng(derive_seed(cfg.seed, (static_cast<std::uint64_t>(k) << 32) + static_cast<std::uint64_t>(j)));
            auto d = span_direction(space, beta, n, rng);
            if (d.empty()) continue;
            rad = std::min(rad, exit_time(set, centers[k], d, cfg.bisection_steps));
        }
        if (std::isfinite(rad)) best = std::max(best, rad);
    }
    return best;
}

double height(const BoundedSet& set, const FundamentalSequence& beta, int n,
              const SmallnessSearch& cfg) {
    if (set.space == nullptr) throw std::invalid_argument("set needs its ambient space");
    if (n < 1 || n > beta.length()) throw std::out_of_range("sequence index out of range");
    if (beta.dim() != set.space->dim()) throw std::invalid_argument("sequence dimension mismatch");
    const BlockSpace& space = *set.space;

    if (closed_form_applies(set, beta, n)) {
        const DiamondCompact& hull = *set.hull;
        // first block with a coordinate outside E_n; its full radius is both
        // attained (mass on a single escaped coordinate) and an upper bound
        // (block tails beyond it are no larger)
        for (int k = 0; k < hull.depth(); ++k)
            if (space.block_offset(k) + space.block_dim(k) > n)
                return hull.schedule().r[static_cast<std::size_t>(k)];
        return 0.0;
    }

    if (!set.sample) throw std::invalid_argument("numeric height needs a point sampler");
    double h = 0.0;
    for (std::size_t i = 0; i < cfg.height_samples; ++i) {
        Rng rng(derive_seed(cfg.seed, 0x68650000u + i));
        std::vector<double> x = set.sample(rng);
        h = std::max(h, span_distance(space, beta, n, x, derive_seed(cfg.seed, i)));
    }
    return h;
}

SmallnessCertificate check_small(const BoundedSet& set, const FundamentalSequence& beta,
                                 double epsilon, const std::vector<int>& sigma, int depth,
                                 const SmallnessSearch& cfg) {
    validate_epsilon(epsilon);
    validate_sigma(sigma, depth);
    if (sigma[static_cast<std::size_t>(depth - 1)] > beta.length())
        throw std::invalid_argument("sigma leaves the fundamental sequence");

    SmallnessCertificate cert;
    cert.epsilon = epsilon;
    cert.sigma.assign(sigma.begin(), sigma.begin() + depth);
    std::ostringstream notes;

    for (int n = 1; n <= depth; ++n) {
        const int m = sigma[static_cast<std::size_t>(n - 1)];
        SmallnessRecord row;
        row.n = n;
        row.sigma_n = m;
        row.analytic = closed_form_applies(set, beta, m);
        row.bound = smallness_bound_at(m, epsilon);

        auto evaluate = [&](const SmallnessSearch& c) {
            row.inner_radius = inner_radius(set, beta, m, c);
            row.height = height(set, beta, m, c);
            row.ratio = row.inner_radius > 0.0
                            ? row.height / row.inner_radius
                            : std::numeric_limits<double>::infinity();
            row.pass = row.inner_radius > 0.0 && row.ratio > 0.0 && row.ratio <= row.bound;
        };
        evaluate(cfg);

        if (row.pass && !row.analytic && cfg.refine_factor > 1) {
            // numeric estimates move against a PASS under refinement (radius
            // down at the searched centers, height up), so re-verify there
            SmallnessSearch fine = cfg;
            fine.directions *= cfg.refine_factor;
            fine.height_samples *= static_cast<std::size_t>(cfg.refine_factor);
            evaluate(fine);
            if (!row.pass) notes << "row " << n << " failed re-verification at refined sampling; ";
        }
        if (row.inner_radius <= 0.0) notes << "row " << n << " is degenerate (empty interior); ";
        else if (row.height <= 0.0) notes << "row " << n << " has zero height (set inside the section); ";
        cert.rows.push_back(row);
    }

    cert.verdict = std::all_of(cert.rows.begin(), cert.rows.end(),
                               [](const SmallnessRecord& r) { return r.pass; });
    cert.note = notes.str();
    if (!cert.note.empty()) cert.note.erase(cert.note.size() - 2);  // trailing "; "
    return cert;
}

std::string SmallnessCertificate::to_text() const {
    std::ostringstream os;
    os << "smallness v1\n";
    os << "epsilon " << fmt(epsilon) << "\n";
    os << "rows " << rows.size() << "\n";
    os << "columns n sigma inner_radius height ratio bound pass analytic\n";
    for (const auto& r : rows) {
        os << r.n << " " << r.sigma_n << " " << fmt(r.inner_radius) << " " << fmt(r.height) << " "
           << fmt(r.ratio) << " " << fmt(r.bound) << " " << (r.pass ? 1 : 0) << " "
           << (r.analytic ? 1 : 0) << "\n";
    }
    os << "verdict " << (verdict ? "PASS" : "FAIL") << "\n";
    if (!note.empty()) os << "note " << note << "\n";
    return os.str();
}

RadiiSchedule small_schedule(double epsilon, int depth) {
    validate_epsilon(epsilon);
    if (depth < 1) throw std::invalid_argument("depth must be at least 1");
    std::vector<double> r{1.0};
    for (int m = 1; m <= depth; ++m) {
        const double q_next = 1.0 / (static_cast<double>(m + 1) * std::pow(2.0, m + 2));
        // halve the target ratio: the inner radius sits below r_m by a factor
        // of at most 1/(1 - max step ratio) >= 15/16, which 1/2 absorbs for
        // every ambient exponent
        const double ratio = 0.5 * std::min(q_next, smallness_bound_at(m, epsilon));
        r.push_back(r.back() * ratio);
    }
    return schedule_from_radii(std::move(r));
}

}  // namespace retractlab
