#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "retractlab/block_space.hpp"
#include "retractlab/rng.hpp"

namespace retractlab {

using VecMap = std::function<std::vector<double>(const std::vector<double>&)>;
using NormFn = std::function<double(std::span<const double>)>;

struct LipschitzReport {
    double estimate = 0.0;
    std::size_t pairs = 0;
    std::uint64_t seed = 0;
    int workers = 1;
    std::vector<double> worst_x, worst_y;
    std::string note;
};

struct ModulusTable {
    std::vector<double> scales;  // ascending
    std::vector<double> omega;   // max displacement at each scale, running max
};

// How sample pairs are produced. Three regimes are mixed: independent draws,
// local pairs at fixed distance scales, and (when gauges are supplied) pairs
// straddling a gauge = 1 shell, where piecewise maps have their seams.
struct PairSampler {
    std::function<std::vector<double>(Rng&)> draw;                 // base point sampler
    std::vector<double> local_scales{1e-1, 1e-2, 1e-3};
    double local_fraction = 0.3;
    std::vector<std::function<double(const std::vector<double>&)>> shell_gauges;
    double shell_fraction = 0.0;
    int max_retries = 100;  // coincident-pair resampling budget
};

PairSampler box_pair_sampler(const BlockSpace& space, double halfwidth);

// Empirical Lipschitz constant: max displacement quotient over sampled pairs.
// Pair i draws its randomness from derive_seed(seed, i), so the result is
// independent of the worker count and bit-identical across runs.
LipschitzReport estimate_lipschitz(const VecMap& map, const PairSampler& sampler,
                                   std::size_t pair_count, std::uint64_t seed,
                                   const NormFn& dist_in, const NormFn& dist_out,
                                   int workers = 1);

LipschitzReport estimate_lipschitz(const BlockSpace& space, const VecMap& map,
                                   const PairSampler& sampler, std::size_t pair_count,
                                   std::uint64_t seed, int workers = 1);

// omega(t) = max ||T x - T y|| over sampled pairs with ||x - y|| <= t.
// Scales are processed in ascending order with a running max, so the table is
// monotone by construction (a pair admissible at t is admissible at t' > t).
ModulusTable estimate_modulus(const VecMap& map, const std::function<std::vector<double>(Rng&)>& draw,
                              const BlockSpace& space, std::vector<double> scales,
                              std::size_t samples_per_scale, std::uint64_t seed);

}  // namespace retractlab
