#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "retractlab/block_space.hpp"
#include "retractlab/estimators.hpp"

namespace retractlab {

// A sup-norm block carrying a near-Euclidean subspace: the rows of an
// angular eps-net of the Euclidean sphere S^{n-1} give coordinates, and the
// frame vector a_i collects the i-th entries of all net directions. Then
// (1 - eps_embed) |c|_2 <= || sum c_i a_i ||_inf <= |c|_2, with the lower
// constant certified on the net's candidate pool and audited by sampling.
struct ModelBlock {
    int n = 0;                                 // Euclidean dimension of the subspace
    int dim = 0;                               // ambient sup-norm dimension (net size)
    std::vector<std::vector<double>> frame;    // n vectors of length dim
    double eps_target = 0.0;                   // requested covering radius
    double eps_embed = 0.0;                    // achieved distortion 1 - cos(radius)

    // |sum c_i a_i|_inf for a coefficient vector of length n
    double embed_norm(std::span<const double> c) const;
    std::string to_text() const;
    static ModelBlock from_text(const std::string& text);
};

// Farthest-point greedy covering of the sphere by angular caps of radius
// eps_embed; stops when the candidate pool is covered, fails if the net
// exceeds the desk-scale cap first. The pool is deterministic per seed and
// always contains the signed coordinate directions.
ModelBlock build_block(int n, double eps_embed, std::uint64_t seed = 1);

// d(x, B_{Y_n}) in the sup norm: min over |c|_2 <= 1 of ||x - sum c_i a_i||.
// Subgradient descent with multi-start; the estimate converges from above.
double dist_to_euclidean_ball(std::span<const double> x, const ModelBlock& block);

// {x : d(x, B_{Y_n}) <= delta}, a compact convex set between B_{Y_n} and
// (1 + delta) times the sup-norm ball.
struct TubeSet {
    ModelBlock block;
    double delta = 0.0;
};

TubeSet make_tube(ModelBlock block, double delta);

bool tube_membership(std::span<const double> x, const TubeSet& tube, double tol = 1e-9);

// Minkowski gauge of the tube by bisection on t |-> membership of x / t
// (monotone since the tube is convex and contains 0). Returns 0 at x = 0 and
// infinity when no scaling ever enters (delta = 0 and x off the subspace).
double tube_gauge(std::span<const double> x, const TubeSet& tube, double tol = 1e-12);

// Closed forms for the quantitative bounds. n >= 1, eps in (0, 1), d >= 1,
// lip >= 0; each throws std::domain_error outside its range.
double quantitative_m(int n, double eps, int d);   // n^{1/4} (1 - eps) / (25 d)
double lind_bound(int n);                          // n^{1/4} / 3
double transfer(double lip, int d, double eps);    // 2 d lip / (1 - eps)

// Tubes placed on disjoint sup-norm blocks and scaled by a decreasing ladder;
// the hull of their union has gauge sum_n gauge_n(x_n) / lambda_n because the
// blocks share no coordinates.
struct AssembledModel {
    std::vector<ModelBlock> blocks;
    std::vector<double> deltas;
    std::vector<double> lambdas;
    BlockSpace space;

    int count() const { return static_cast<int>(blocks.size()); }
    // block-n component of x as a coefficient vector in the block's ambient
    std::vector<double> block_slice(int n, std::span<const double> x) const;
    double hull_gauge(std::span<const double> x) const;
    bool member(std::span<const double> x, double tol = 1e-9) const;
    std::vector<double> sample_hull(Rng& rng) const;

    std::string to_text() const;
    static AssembledModel from_text(const std::string& text);
};

// blocks 1..count with the given embedding accuracy; lambdas default to the
// standard shrink ladder, deltas to lambda_n / 2^n when not supplied.
AssembledModel assemble_model(int count, double eps_embed,
                              std::vector<double> lambdas = {},
                              std::vector<double> deltas = {}, std::uint64_t seed = 1);

struct AuditRow {
    int n = 0;
    int dim = 0;
    double lambda = 0.0;
    double delta = 0.0;
    double lip_estimate = 0.0;  // induced constant of the block-n factor map
    double m_bound = 0.0;       // quantitative_m at this block
    double ratio = 0.0;         // lip_estimate / m_bound
    bool evidence = false;      // estimate reaches m_bound / (2 M)
};

struct AuditReport {
    double fdd_constant = 0.0;  // M supplied for the audit
    double epsilon = 0.0;
    double max_fix_residual = 0.0;
    double max_range_gauge = 0.0;
    std::size_t fix_samples = 0;
    std::size_t range_samples = 0;
    std::size_t pairs_per_block = 0;
    int workers = 1;
    std::vector<AuditRow> rows;
    std::string note;

    std::string to_text() const;
    std::string csv() const;
};

struct AuditConfig {
    std::size_t fix_samples = 256;
    std::size_t range_samples = 64;
    std::size_t pairs_per_block = 4000;
    double fix_tolerance = 1e-7;
    double range_tolerance = 1e-4;  // gauge slack for solver-accurate candidates
    std::uint64_t seed = 1;
    int workers = 1;
};

// Audits a candidate retraction onto the assembled hull: checks that it fixes
// sampled hull points and maps sampled ambient points into the hull (either
// failure throws with a witness), then estimates the Lipschitz constant of
// every induced factor map
//   F_n(x) = (block-n component of candidate(lambda_n x)) / lambda_n
// and compares it against quantitative_m. Rows with estimate above
// m_bound / (2 M) mark where the candidate's constant blows up; sampling can
// document the blow-up but cannot certify that no retraction exists. With
// workers > 1 the blocks run concurrently, so the candidate must tolerate
// concurrent calls.
AuditReport retraction_audit(const AssembledModel& model, const VecMap& candidate,
                             double fdd_constant, double epsilon,
                             const AuditConfig& cfg = {});

}  // namespace retractlab
