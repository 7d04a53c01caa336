#include "retractlab/proximity.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace retractlab {

std::vector<double> hull_linear_minimizer(const DiamondCompact& K, std::span<const double> g) {
    const BlockSpace& space = K.space();
    int best_block = 0;
    double best_score = -1.0;
    for (int k = 0; k < K.depth(); ++k) {
        double score = K.schedule().r[static_cast<std::size_t>(k)] * space.block(k).dual(space.block_view(k, g));
        if (score > best_score) {
            best_score = score;
            best_block = k;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(space.dim()), 0.0);
    if (best_score <= 0.0) return out;  // zero functional: no descent direction, signal with 0
    auto v = space.block(best_block).norming_point(space.block_view(best_block, g));
    const double r = K.schedule().r[static_cast<std::size_t>(best_block)];
    const int off = space.block_offset(best_block);
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(off) + i] = -r * v[i];
    return out;
}

namespace {

bool all_euclidean(const BlockSpace& s) {
    if (s.ambient_rule() != PNorm::Two) return false;
    for (int i = 0; i < s.block_count(); ++i)
        if (!s.block(i).is_p() || s.block(i).pkind() != PNorm::Two) return false;
    return true;
}

struct Atom {
    std::vector<double> v;
    double w;
};

std::vector<double> combine(const std::vector<Atom>& atoms, std::size_t dim) {
    std::vector<double> y(dim, 0.0);
    for (const auto& a : atoms) vec_axpy(y, a.w, a.v);
    return y;
}

}  // namespace

NearestPointResult nearest_point_fw(const DiamondCompact& K, const std::vector<double>& x,
                                    int max_iterations, double gap_tolerance) {
    const BlockSpace& space = K.space();
    if (!all_euclidean(space))
        throw std::invalid_argument(
            "nearest_point_fw needs an all-Euclidean model; use nearest_point_general");

    NearestPointResult res;
    if (K.contains(x, 1e-15)) {  // membership is exact through the gauge
        res.point = space.truncate(x, K.depth());
        if (K.gauge(res.point) <= 1.0) {
            res.distance = space.distance(x, res.point);
            if (res.distance == 0.0) {
                res.converged = true;
                return res;
            }
        }
    }

    const std::size_t dim = static_cast<std::size_t>(space.dim());
    std::vector<Atom> atoms;
    {
        std::vector<double> g0(dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) g0[i] = -x[i];
        atoms.push_back({hull_linear_minimizer(K, g0), 1.0});
    }
    std::vector<double> y = atoms.front().v;

    double gap = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < max_iterations; ++it) {
        std::vector<double> g = vec_sub(y, x);  // gradient of 1/2 ||x-y||^2
        std::vector<double> s = hull_linear_minimizer(K, g);
        gap = vec_dot(g, vec_sub(y, s));
        if (gap <= gap_tolerance) break;

        // away atom: the active vertex the gradient most wants to leave
        std::size_t away = 0;
        double away_score = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < atoms.size(); ++j) {
            double sc = vec_dot(g, atoms[j].v);
            if (sc > away_score) {
                away_score = sc;
                away = j;
            }
        }

        const double fw_score = vec_dot(g, vec_sub(y, s));
        const double aw_score = away_score - vec_dot(g, y);
        std::vector<double> dir;
        double gamma_max;
        bool is_away = aw_score > fw_score && atoms.size() > 1;
        if (is_away) {
            dir = vec_sub(y, atoms[away].v);
            gamma_max = atoms[away].w / (1.0 - atoms[away].w);
            if (!(gamma_max > 0.0) || !std::isfinite(gamma_max)) is_away = false;
        }
        if (!is_away) {
            dir = vec_sub(s, y);
            gamma_max = 1.0;
        }

        const double denom = vec_dot(dir, dir);
        if (denom <= 0.0) break;
        double gamma = vec_dot(vec_sub(x, y), dir) / denom;  // exact line search
        gamma = std::clamp(gamma, 0.0, gamma_max);
        if (gamma == 0.0 && !is_away) break;

        if (is_away) {
            for (auto& a : atoms) a.w *= 1.0 + gamma;
            atoms[away].w -= gamma;
        } else {
            for (auto& a : atoms) a.w *= 1.0 - gamma;
            bool merged = false;
            for (auto& a : atoms) {
                if (a.v == s) {
                    a.w += gamma;
                    merged = true;
                    break;
                }
            }
            if (!merged) atoms.push_back({std::move(s), gamma});
        }
        std::erase_if(atoms, [](const Atom& a) { return a.w <= 1e-18; });
        y = combine(atoms, dim);
    }

    res.point = std::move(y);
    res.distance = space.distance(x, res.point);
    res.iterations = it;
    res.gap = gap;
    res.converged = gap <= gap_tolerance;
    if (!res.converged) res.tie_note = "iteration budget exhausted before the gap tolerance";
    return res;
}

NearestPointResult nearest_point_general(const DiamondCompact& K, const NormHandle& norm,
                                         const std::vector<double>& x,
                                         const GeneralNearestConfig& cfg) {
    const BlockSpace& space = K.space();
    const std::size_t dim = static_cast<std::size_t>(space.dim());

    NearestPointResult res;
    std::vector<double> inside = space.truncate(x, K.depth());
    if (K.gauge(inside) <= 1.0 && space.distance(x, inside) == 0.0) {
        res.point = std::move(inside);
        res.converged = true;
        return res;
    }

    auto feasible = [&](std::vector<double> y) {
        space.truncate_inplace(y, K.depth());
        double g = K.gauge(y);
        if (g > 1.0)
            for (auto& v : y) v /= g;
        return y;
    };
    auto objective = [&](const std::vector<double>& y) { return norm.eval(vec_sub(x, y)); };

    std::vector<std::vector<double>> starts;
    starts.push_back(feasible(x));                       // gauge-scaled input
    starts.push_back(std::vector<double>(dim, 0.0));     // centre
    starts.push_back(K.retract(x));                      // peeling retraction output
    if (all_euclidean(space)) starts.push_back(nearest_point_fw(K, x).point);
    Rng rng(derive_seed(cfg.seed, 0xabcdu));
    for (int s = 0; s < cfg.starts; ++s) starts.push_back(K.sample_hull(rng));

    struct Candidate {
        std::vector<double> y;
        double f;
        bool settled;
    };
    std::vector<Candidate> finals;
    int total_iters = 0;

    for (std::size_t si = 0; si < starts.size(); ++si) {
        std::vector<double> y = starts[si];
        std::vector<double> y_best = y;
        double f_best = objective(y);
        double step0 = std::max(f_best, 1e-8);
        int stalled = 0;
        bool hit_budget = true;
        for (int t = 1; t <= cfg.iterations; ++t, ++total_iters) {
            std::vector<double> g = norm.subgradient(vec_sub(x, y));  // descend along +g
            double gn = space.ambient_norm(g);
            if (gn < 1e-15) {
                hit_budget = false;
                break;
            }
            double step = step0 / (gn * std::sqrt(static_cast<double>(t)));
            std::vector<double> ynext = y;
            vec_axpy(ynext, step, g);
            y = feasible(std::move(ynext));
            double f = objective(y);
            if (f < f_best - 1e-14) {
                f_best = f;
                y_best = y;
                stalled = 0;
            } else if (++stalled > 250) {
                hit_budget = false;
                break;
            }
        }

        // pattern polish: the subgradient phase lands near the optimum but its
        // diminishing steps close the last gap slowly; shrinking coordinate and
        // random probe moves finish the job and certify local stationarity
        Rng probe_rng(derive_seed(cfg.seed, 0x70110000u + si));
        double radius = std::max(f_best * 0.25, 1e-6);
        int rounds = 0;
        while (rounds < 200 && radius > 1e-12) {
            ++rounds;
            bool improved = false;
            auto try_move = [&](const std::vector<double>& d) {
                std::vector<double> cand = y_best;
                vec_axpy(cand, radius, d);
                cand = feasible(std::move(cand));
                double f = objective(cand);
                if (f < f_best - 1e-15) {
                    f_best = f;
                    y_best = std::move(cand);
                    improved = true;
                }
            };
            std::vector<double> d(dim, 0.0);
            for (std::size_t i = 0; i < dim; ++i) {
                d[i] = 1.0;
                try_move(d);
                d[i] = -1.0;
                try_move(d);
                d[i] = 0.0;
            }
            for (std::size_t k = 0; k < 2 * dim; ++k) {
                auto r = probe_rng.gaussian_vector(dim);
                double rn = space.ambient_norm(r);
                if (rn < 1e-15) continue;
                for (auto& v : r) v /= rn;
                try_move(r);
            }
            if (!improved) radius *= 0.5;
        }
        finals.push_back({std::move(y_best), f_best, !hit_budget || radius <= 1e-12});
    }

    const Candidate* best = &finals.front();
    for (const auto& c : finals)
        if (c.f < best->f) best = &c;

    // tie detection: several starts at the optimal value but far apart
    double spread = 0.0;
    for (const auto& c : finals) {
        if (c.f <= best->f + cfg.tie_tolerance)
            spread = std::max(spread, space.distance(c.y, best->y));
    }

    res.point = best->y;
    res.distance = best->f;
    res.iterations = total_iters;
    res.gap = spread;
    res.converged = best->settled;
    if (spread > cfg.tie_separation)
        res.tie_note = "multiple minimizers within tolerance; nearest point is not unique here";
    return res;
}

UredNorm::UredNorm(const BlockSpace& base, std::vector<std::vector<double>> functionals)
    : base_(&base), functionals_(std::move(functionals)) {
    double s = 0.0;
    for (std::size_t n = 1; n <= functionals_.size(); ++n) s += std::pow(4.0, -static_cast<double>(n));
    upper_factor_ = std::sqrt(1.0 + s);
}

double UredNorm::eval(std::span<const double> x) const {
    double base = base_->ambient_norm(x);
    double s = base * base;
    for (std::size_t n = 0; n < functionals_.size(); ++n) {
        double f = vec_dot(functionals_[n], x) / std::pow(2.0, static_cast<double>(n + 1));
        s += f * f;
    }
    return std::sqrt(s);
}

std::vector<double> UredNorm::subgradient(std::span<const double> x) const {
    double total = eval(x);
    std::vector<double> g(x.size(), 0.0);
    if (total == 0.0) return g;
    double base = base_->ambient_norm(x);
    std::vector<double> gb = base_->ambient_subgradient(x);
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = base * gb[i];
    for (std::size_t n = 0; n < functionals_.size(); ++n) {
        double w = std::pow(4.0, -static_cast<double>(n + 1));
        double f = vec_dot(functionals_[n], x);
        vec_axpy(g, w * f, functionals_[n]);
    }
    for (auto& v : g) v /= total;
    return g;
}

NormHandle UredNorm::handle() const {
    return {
        [this](std::span<const double> x) { return eval(x); },
        [this](std::span<const double> x) { return subgradient(x); },
    };
}

UredNorm ured_renorm(const BlockSpace& base, std::vector<std::vector<double>> functionals,
                     int span_dim) {
    if (functionals.empty()) throw std::invalid_argument("renorming needs at least one functional");
    for (const auto& f : functionals) {
        if (static_cast<int>(f.size()) != base.dim())
            throw std::invalid_argument("functional has wrong dimension");
        double dn = base.ambient_dual_norm(f);
        if (std::abs(dn - 1.0) > 1e-9)
            throw std::invalid_argument("renorming functionals must have dual norm one");
    }
    const int target = span_dim < 0 ? base.dim() : span_dim;
    if (target > 0) {
        // separating on span(e_1..e_target): the restricted table has full rank
        Eigen::MatrixXd F(static_cast<Eigen::Index>(functionals.size()),
                          static_cast<Eigen::Index>(target));
        for (std::size_t r = 0; r < functionals.size(); ++r)
            for (int c = 0; c < target; ++c)
                F(static_cast<Eigen::Index>(r), c) = functionals[r][static_cast<std::size_t>(c)];
        Eigen::FullPivLU<Eigen::MatrixXd> lu(F);
        lu.setThreshold(1e-10);
        if (lu.rank() < target)
            throw std::invalid_argument("renorming functionals do not separate the target span");
    }
    return UredNorm(base, std::move(functionals));
}

std::vector<std::vector<double>> coordinate_functionals(const BlockSpace& base, int count) {
    if (count < 1 || count > base.dim()) throw std::out_of_range("functional count out of range");
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < count; ++i) {
        std::vector<double> f(static_cast<std::size_t>(base.dim()), 0.0);
        f[static_cast<std::size_t>(i)] = 1.0;
        double dn = base.ambient_dual_norm(f);
        f[static_cast<std::size_t>(i)] = 1.0 / dn;
        rows.push_back(std::move(f));
    }
    return rows;
}

ContinuityProbe uniform_continuity_probe(const VecMap& map, const BlockSpace& space,
                                         const std::function<std::vector<double>(Rng&)>& draw,
                                         std::vector<double> scales, std::size_t samples_per_scale,
                                         double threshold, std::uint64_t seed) {
    ContinuityProbe probe;
    probe.table = estimate_modulus(map, draw, space, std::move(scales), samples_per_scale, seed);
    probe.threshold = threshold;
    probe.pass = !probe.table.omega.empty() && probe.table.omega.front() <= threshold;
    return probe;
}

RotundityWitness rotundity_probe(const NormHandle& norm, const std::vector<double>& z,
                                 double eta, double min_separation, std::size_t samples,
                                 std::uint64_t seed) {
    if (std::abs(norm.eval(z) - 1.0) > 1e-9)
        throw std::invalid_argument("direction must have norm one");
    const std::size_t dim = z.size();
    RotundityWitness best;

    for (std::size_t i = 0; i < samples; ++i) {
        Rng rng(derive_seed(seed, i));
        std::vector<double> x(dim);
        for (auto& v : x) v = rng.normal();
        double n = norm.eval(x);
        if (n < 1e-12) continue;
        for (auto& v : x) v /= n;

        // t -> ||x - t z|| is convex with value 1 at t = 0, so its sublevel
        // set {t : value <= 1} is an interval [t_minus, t_plus] through 0.
        // Its endpoints are unit vectors; a wide interval whose midpoint
        // stays near the sphere is exactly a flat spot in direction z.
        auto val = [&](double t) {
            std::vector<double> y = x;
            vec_axpy(y, -t, z);
            return norm.eval(y);
        };
        auto sublevel_end = [&](double direction) {
            double hi = 1e-3;
            while (hi < 8.0 && val(direction * hi) <= 1.0) hi *= 2.0;
            if (val(direction * hi) <= 1.0) return direction * hi;  // ||z||=1 rules this out
            double lo = 0.0;
            for (int k = 0; k < 80; ++k) {
                double mid = 0.5 * (lo + hi);
                (val(direction * mid) <= 1.0 ? lo : hi) = mid;
            }
            return direction * lo;
        };
        const double t_plus = sublevel_end(1.0);
        const double t_minus = sublevel_end(-1.0);

        std::vector<double> xe = x;
        vec_axpy(xe, -t_minus, z);
        std::vector<double> y = x;
        vec_axpy(y, -t_plus, z);
        if (std::abs(norm.eval(xe) - 1.0) > 1e-9 || std::abs(norm.eval(y) - 1.0) > 1e-9) continue;

        std::vector<double> mid = vec_add(xe, y);
        for (auto& v : mid) v *= 0.5;
        double mnorm = norm.eval(mid);
        double sep = norm.eval(vec_sub(xe, y));
        x = xe;
        if (mnorm >= 1.0 - eta && sep >= min_separation && sep > best.separation) {
            best.found = true;
            best.x = x;
            best.y = y;
            best.separation = sep;
            best.midpoint_norm = mnorm;
        }
    }
    return best;
}

}  // namespace retractlab
