#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "retractlab/block_space.hpp"
#include "retractlab/diamond.hpp"
#include "retractlab/estimators.hpp"
#include "retractlab/smallness.hpp"

namespace retractlab {

// Randomized mollification of a Lipschitz map: evaluation returns the
// Monte-Carlo average of the base map over x + tau * (unit ball of the
// domain), with the sample stream derived from the seed and the bits of x, so
// repeated evaluation at the same point gives identical values. The recorded
// Lipschitz budget is L (1 + D h / (L tau)) with D the domain dimension and h
// the base map's deviation bound; the recorded deviation budget is
// L tau + 2 h.
class SmoothedMap {
public:
    // domain: the space whose unit ball drives the mollification (a prefix
    // model when the map is restricted to leading coordinates).
    // input_radius: when nonnegative, evaluations with ambient norm beyond it
    // throw std::domain_error (the base map is only trusted on the enlarged
    // box around that region).
    SmoothedMap(VecMap base, BlockSpace domain, double tau, std::size_t samples,
                std::uint64_t seed, double base_lip, double base_deviation,
                double input_radius = -1.0);

    std::vector<double> operator()(std::span<const double> x) const;
    VecMap map() const;

    double tau() const { return tau_; }
    std::size_t samples() const { return samples_; }
    std::uint64_t seed() const { return seed_; }
    double lip_budget() const { return lip_budget_; }
    double deviation_budget() const { return deviation_budget_; }

private:
    VecMap base_;
    BlockSpace domain_;
    double tau_;
    std::size_t samples_;
    std::uint64_t seed_;
    double lip_budget_;
    double deviation_budget_;
    double input_radius_;
};

SmoothedMap begun_smooth(VecMap base, BlockSpace domain, double tau, std::size_t samples,
                         std::uint64_t seed, double base_lip, double base_deviation,
                         double input_radius = -1.0);

// Normalized basis a_1..a_phi of the working subspace with biorthogonal
// functionals; the first base_count pairs are an Auerbach system for the
// target subspace E (norm-one vectors, norm-one functionals, biorthogonal).
struct Frame {
    std::vector<std::vector<double>> vectors;
    std::vector<std::vector<double>> functionals;
    int base_count = 0;

    int size() const { return static_cast<int>(vectors.size()); }
    double coefficient(int i, std::span<const double> x) const;
};

// Coordinate frame on the first `total` coordinates, Auerbach on the first
// `base_count`; requires norm-one coordinate vectors (p-norm blocks).
Frame canonical_frame(const BlockSpace& space, int base_count, int total);

// Checks norm-one vectors, biorthogonality and, for the Auerbach prefix,
// norm-one functionals. Throws std::invalid_argument on failure.
void validate_frame(const Frame& frame, const BlockSpace& space, double tol = 1e-9);

// base_radius * conv{±a_i : i <= base_count} thickened by a hypercube of
// half-width `thickness` in the remaining frame directions. Volumes are in
// the frame's product measure: 2^phi r^sigma delta^(phi-sigma) / sigma!.
class AveragingBox {
public:
    AveragingBox(Frame frame, double base_radius, double thickness, const BlockSpace& space);

    const Frame& frame() const { return frame_; }
    double base_radius() const { return base_radius_; }
    double thickness() const { return thickness_; }
    int base_count() const { return frame_.base_count; }
    int total_count() const { return frame_.size(); }

    std::vector<double> sample(Rng& rng) const;     // exact uniform draw
    double volume() const;
    double section_volume(int i) const;             // drop one base direction (0-based, i < base_count)
    double section_ratio() const { return base_count() / (2.0 * base_radius_); }
    double diameter() const;                        // ambient-norm upper bound across the box

private:
    Frame frame_;
    double base_radius_;
    double thickness_;
    const BlockSpace* space_;
};

AveragingBox build_box(Frame frame, double base_radius, double thickness,
                       const BlockSpace& space);

enum class DerivativeEstimator {
    FiniteDifference,  // centered differences with step fd_step on every direction
    Segment,           // exact chord form on base directions, differences elsewhere
};

// Average derivative of `map` over the box, one column per frame direction:
// column i estimates the mean of d map(x)[a_i]. The segment estimator
// divides the endpoint difference of the chord through the sample along a_i
// by the chord length, which is exact per sample for linear maps; chords
// shorter than 1e-7 * base_radius are skipped and counted. Deterministic for
// a fixed seed regardless of worker count; the worker count used is recorded.
struct AveragedOperator {
    std::vector<std::vector<double>> columns;  // ambient images of the frame directions
    std::vector<std::size_t> used;             // samples contributing per column
    std::vector<std::size_t> skipped;          // short chords / shrunken steps per column
    double fd_step = 0.0;
    int workers = 1;
    DerivativeEstimator estimator = DerivativeEstimator::Segment;

    // apply to an ambient vector of the box's subspace via frame coordinates
    std::vector<double> apply(const Frame& frame, std::span<const double> x) const;
};

AveragedOperator average_derivative(const VecMap& map, const AveragingBox& box, int directions,
                                    std::size_t samples, double fd_step, std::uint64_t seed,
                                    DerivativeEstimator estimator = DerivativeEstimator::Segment,
                                    int workers = 1);

// Finite-rank projection extracted from an averaged operator: invert the
// restriction to E (well-posed when the operator moves E by at most half, the
// checked gap below) and compose. The certificate records the matrix in
// frame coordinates, an operator-norm estimate over the subspace sphere, the
// identity and idempotency residuals, and pass flags against 4L and the
// final lambda bound 8L/(1-eps) (vacuous at eps = 1, noted).
struct ProjectionCertificate {
    std::vector<std::vector<double>> matrix;  // base_count x phi, frame coordinates
    int base_count = 0;
    int total_count = 0;
    double norm_estimate = 0.0;
    double lip_reference = 0.0;
    double epsilon = 0.0;
    double restriction_gap = 0.0;      // max ||op(x) - x|| / ||x|| over the E sphere
    double identity_residual = 0.0;    // max ||P x - x|| over unit x in E
    double projection_residual = 0.0;  // operator-norm estimate of P∘P - P
    double bound_4l = 0.0;
    double bound_8l = 0.0;
    double lambda_estimate = 0.0;      // 2/(1-eps) * norm_estimate
    bool half_condition = false;
    bool pass_4l = false;
    bool pass_8l = false;
    std::string note;

    std::string to_text() const;
    std::string matrix_csv() const;  // row-major dump with a frame metadata header
};

ProjectionCertificate extract_projection(const AveragedOperator& op, const Frame& frame,
                                         const BlockSpace& space, double lip, double epsilon,
                                         std::uint64_t seed = 1);

// Polyhedral surrogate norm |x| = max_j |f_j(x)| from a greedy covering of
// the dual sphere at scale eps (dimensions <= 4). Sandwich
// |x| <= ||x|| <= |x| / (1 - eps) is verified on sampled points; a violation
// throws with the witness in the message.
struct PolyhedralNorm {
    FunctionalTable table;
    double epsilon = 0.0;
    std::size_t net_size = 0;
};

PolyhedralNorm epsnet_polyhedral_norm(const BlockSpace& space, double epsilon,
                                      std::size_t candidates = 4096, std::uint64_t seed = 1);

struct DeltaTrendRow {
    double delta = 0.0;
    double seam_max = 0.0;
    double norm_estimate = 0.0;
};

struct PiStageReport {
    int n = 0;
    int sigma_n = 0;
    long long phi_n = 0;
    double inner_radius = 0.0;
    double height = 0.0;
    double tau = 0.0;
    double rho = 0.0;                  // h (phi + 2)
    double smoothed_lip_budget = 0.0;  // 2L at the chosen tau
    double seam_bound = 0.0;           // sigma h (phi + 2) / r
    double seam_max = 0.0;             // at the smallest thickness
    std::vector<double> seam;          // per base direction
    std::vector<DeltaTrendRow> trend;
    ProjectionCertificate projection;  // at the smallest thickness
    bool pass = false;
    std::string note;
};

struct PiCertificate {
    double epsilon = 0.0;
    double lip = 0.0;
    double lambda_bound = 0.0;  // max over stages of the lambda estimate
    std::vector<PiStageReport> stages;
    bool verdict = false;
    std::string note;

    std::string to_text() const;
};

struct PiPipelineConfig {
    std::vector<double> thickness_ladder{1e-1, 1e-2, 1e-3};
    std::size_t smoothing_samples = 64;
    std::size_t box_samples = 4000;
    std::uint64_t seed = 1;
    int workers = 1;
    long long phi_override = -1;  // substitute witness dimension; -1 keeps the formula
    DerivativeEstimator estimator = DerivativeEstimator::Segment;
    double seam_tolerance = 1e-2;  // sampling slack on top of the seam bound
};

// Full certificate for the requested stage indices: per stage, mollify the
// nearest-point composition at tau = phi h / L, average derivatives over the
// thickness ladder, extract the projection at the smallest thickness, and
// compare against the 4L and 8L/(1-eps) budgets. Requires the smallness
// certificate for (eps, sigma) to PASS at the requested stages; stage
// failures beyond that are reported per stage, never thrown.
PiCertificate pi_certificate(const DiamondCompact& hull, const VecMap& retraction, double lip,
                             double epsilon, const std::vector<int>& sigma,
                             const std::vector<int>& stages, const PiPipelineConfig& cfg = {});

}  // namespace retractlab
