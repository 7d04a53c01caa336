#include "retractlab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace retractlab {

PairSampler box_pair_sampler(const BlockSpace& space, double halfwidth) {
    PairSampler s;
    s.draw = [&space, halfwidth](Rng& rng) { return space.sample_box(rng, halfwidth); };
    return s;
}

namespace {

struct PairBest {
    double quotient = -1.0;
    std::size_t index = std::numeric_limits<std::size_t>::max();
    std::vector<double> x, y;
};

// Draw one pair for pair-index `i`. Regime selection and all randomness come
// from the per-index stream.
std::pair<std::vector<double>, std::vector<double>> draw_pair(const PairSampler& s, Rng& rng) {
    const bool use_shell = !s.shell_gauges.empty() && s.shell_fraction > 0.0;
    double pick = rng.uniform01();
    std::vector<double> x = s.draw(rng);

    if (use_shell && pick < s.shell_fraction) {
        // scale the base point onto a gauge = 1 shell, then straddle it
        const auto& gauge = s.shell_gauges[rng.next() % s.shell_gauges.size()];
        double g = gauge(x);
        if (g > 1e-12) {
            for (auto& v : x) v /= g;
            double eta = s.local_scales.empty()
                             ? 1e-3
                             : s.local_scales[rng.next() % s.local_scales.size()];
            std::vector<double> y = x;
            double inner = 1.0 - eta * rng.uniform01();
            double outer = 1.0 + eta * rng.uniform01();
            for (auto& v : x) v *= inner;
            for (std::size_t k = 0; k < y.size(); ++k)
                y[k] = y[k] * outer + eta * 0.1 * rng.uniform(-1.0, 1.0);
            return {std::move(x), std::move(y)};
        }
        // fall through to an independent pair when the base point is degenerate
    }

    if (!s.local_scales.empty() && pick < s.shell_fraction + s.local_fraction) {
        double eta = s.local_scales[rng.next() % s.local_scales.size()];
        std::vector<double> y = x;
        for (auto& v : y) v += eta * rng.uniform(-1.0, 1.0);
        return {std::move(x), std::move(y)};
    }

    return {std::move(x), s.draw(rng)};
}

}  // namespace

LipschitzReport estimate_lipschitz(const VecMap& map, const PairSampler& sampler,
                                   std::size_t pair_count, std::uint64_t seed,
                                   const NormFn& dist_in, const NormFn& dist_out, int workers) {
    if (pair_count == 0) throw std::invalid_argument("pair_count must be positive");
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    if (!sampler.draw) throw std::invalid_argument("sampler has no draw function");

    const int w = std::min<int>(workers, static_cast<int>(std::min<std::size_t>(
                                              pair_count, std::size_t(64))));
    std::vector<PairBest> best(static_cast<std::size_t>(w));
    std::vector<std::string> errors(static_cast<std::size_t>(w));

    auto run = [&](int id) {
        PairBest local;
        try {
            for (std::size_t i = static_cast<std::size_t>(id); i < pair_count;
                 i += static_cast<std::size_t>(w)) {
                Rng rng(derive_seed(seed, i));
                std::vector<double> x, y;
                double d = 0.0;
                int attempt = 0;
                for (;; ++attempt) {
                    if (attempt > sampler.max_retries)
                        throw std::runtime_error("coincident sample pair persisted after resampling");
                    auto [a, b] = draw_pair(sampler, rng);
                    d = dist_in(vec_sub(a, b));
                    if (d > 0.0) {
                        x = std::move(a);
                        y = std::move(b);
                        break;
                    }
                }
                double q = dist_out(vec_sub(map(x), map(y))) / d;
                if (q > local.quotient || (q == local.quotient && i < local.index)) {
                    local.quotient = q;
                    local.index = i;
                    local.x = x;
                    local.y = y;
                }
            }
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(id)] = e.what();
        }
        best[static_cast<std::size_t>(id)] = std::move(local);
    };

    if (w == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(w));
        for (int id = 0; id < w; ++id) pool.emplace_back(run, id);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (!e.empty()) throw std::runtime_error(e);

    // max-merge; ties broken by the smaller pair index so the winner does not
    // depend on the worker count
    PairBest top;
    for (auto& b : best) {
        if (b.quotient > top.quotient ||
            (b.quotient == top.quotient && b.index < top.index)) {
            top = std::move(b);
        }
    }

    LipschitzReport rep;
    rep.estimate = std::max(top.quotient, 0.0);
    rep.pairs = pair_count;
    rep.seed = seed;
    rep.workers = workers;
    rep.worst_x = std::move(top.x);
    rep.worst_y = std::move(top.y);
    rep.note = "max displacement quotient over sampled pairs; a lower estimate of the true constant";
    return rep;
}

LipschitzReport estimate_lipschitz(const BlockSpace& space, const VecMap& map,
                                   const PairSampler& sampler, std::size_t pair_count,
                                   std::uint64_t seed, int workers) {
    NormFn nrm = [&space](std::span<const double> v) { return space.ambient_norm(v); };
    return estimate_lipschitz(map, sampler, pair_count, seed, nrm, nrm, workers);
}

ModulusTable estimate_modulus(const VecMap& map, const std::function<std::vector<double>(Rng&)>& draw,
                              const BlockSpace& space, std::vector<double> scales,
                              std::size_t samples_per_scale, std::uint64_t seed) {
    if (scales.empty()) throw std::invalid_argument("modulus estimation needs at least one scale");
    std::sort(scales.begin(), scales.end());
    if (scales.front() <= 0.0) throw std::invalid_argument("modulus scales must be positive");

    ModulusTable table;
    table.scales = scales;
    table.omega.assign(scales.size(), 0.0);

    double running = 0.0;
    std::uint64_t stream = 0;
    for (std::size_t si = 0; si < scales.size(); ++si) {
        const double t = scales[si];
        double worst = 0.0;
        for (std::size_t i = 0; i < samples_per_scale; ++i, ++stream) {
            Rng rng(derive_seed(seed, stream));
            std::vector<double> x = draw(rng);
            std::vector<double> dir = space.sample_ambient_sphere(rng);
            double r = t * rng.uniform01();
            std::vector<double> y = x;
            vec_axpy(y, r, dir);
            double moved = space.distance(map(x), map(y));
            worst = std::max(worst, moved);
        }
        running = std::max(running, worst);
        table.omega[si] = running;
    }
    return table;
}

}  // namespace retractlab
