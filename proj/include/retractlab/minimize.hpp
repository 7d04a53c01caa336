#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "retractlab/block_space.hpp"

namespace retractlab {

// A norm as a pair (value, one subgradient selection).
struct NormHandle {
    std::function<double(std::span<const double>)> eval;
    std::function<std::vector<double>(std::span<const double>)> subgradient;
};

NormHandle ambient_norm_handle(const BlockSpace& space);
NormHandle pnorm_handle(PNorm kind);

struct MinimizeConfig {
    int iterations = 2500;
    int starts = 4;            // random restarts on top of the deterministic warm starts
    std::uint64_t seed = 1;
    double tolerance = 1e-10;  // early stop when the best value stalls this tightly
};

struct SpanMinimum {
    std::vector<double> coefficients;  // c
    std::vector<double> point;         // A c
    double value = 0.0;                // ||x - A c||
    int iterations = 0;
};

// minimize ||x - sum_i c_i a_i|| over c, optionally subject to |c|_2 <= ball_radius
// (pass a negative radius for an unconstrained span). Subgradient descent with
// a Euclidean least-squares warm start; exact for PNorm::Two without ball
// constraint. Deterministic for a fixed config.
SpanMinimum min_norm_over_span(const NormHandle& norm, std::span<const double> x,
                               const std::vector<std::vector<double>>& frame,
                               double ball_radius, const MinimizeConfig& cfg);

// Nearest point of the coordinate-prefix subspace span(e_1..e_k) in any block
// p-sum norm: plain truncation attains the infimum, and is the selection used
// throughout (recorded tie rule for non-strictly-convex norms).
std::vector<double> nearest_in_prefix(const BlockSpace& space, std::span<const double> x, int prefix_dim);

// Multilevel exhaustive grid minimizer of ||x - y|| over members y of a convex
// set inside [-halfwidth, halfwidth]^d: full grid at each level, re-centred
// and refined around the incumbent until the target resolution. Sound as a
// brute-force oracle because the objective is convex and the feasible set is
// convex (0 is assumed feasible). Independent of the production solvers.
struct GridNearest {
    std::vector<double> point;
    double value = 0.0;
};
GridNearest grid_nearest_point(std::span<const double> x,
                               const std::function<bool(const std::vector<double>&)>& member,
                               int dim, double halfwidth, double resolution,
                               const std::function<double(std::span<const double>)>& norm);

}  // namespace retractlab
