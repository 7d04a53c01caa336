#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "retractlab/diamond.hpp"
#include "retractlab/estimators.hpp"
#include "retractlab/minimize.hpp"

namespace retractlab {

// Linear minimization oracle over the hull: argmin <g, y> over y in K.
// A linear functional is minimized at an extreme point, i.e. at -r_k times a
// norming point of g's block-k component for the block with the largest
// scaled dual norm. p-norm blocks only.
std::vector<double> hull_linear_minimizer(const DiamondCompact& K, std::span<const double> g);

struct NearestPointResult {
    std::vector<double> point;
    double distance = 0.0;
    int iterations = 0;
    double gap = 0.0;        // duality gap (FW) or final stall width (subgradient)
    bool converged = false;  // gap within tolerance
    std::string tie_note;    // non-empty when multistarts disagree about the argmin
};

// Euclidean nearest point in the hull by away-step Frank-Wolfe with exact
// line search. Requires an all-Euclidean model (2-norm blocks, 2-sum rule);
// other models are served by nearest_point_general. Points already in the
// hull are returned unchanged with distance 0.
NearestPointResult nearest_point_fw(const DiamondCompact& K, const std::vector<double>& x,
                                    int max_iterations = 20000, double gap_tolerance = 1e-8);

struct GeneralNearestConfig {
    int iterations = 3000;
    int starts = 4;
    std::uint64_t seed = 1;
    double tie_tolerance = 1e-6;   // objective window that counts as "also optimal"
    double tie_separation = 1e-3;  // argmin spread that triggers the tie note
};

// Nearest point of the hull in an arbitrary norm: projected subgradient
// descent with feasibility kept by gauge scaling y -> y / max(1, gauge(y)).
NearestPointResult nearest_point_general(const DiamondCompact& K, const NormHandle& norm,
                                         const std::vector<double>& x,
                                         const GeneralNearestConfig& cfg);

// Renormed norm |||x||| = sqrt(||x||^2 + sum_n (f_n(x)/2^n)^2) for a table of
// dual-norm-one functionals. Strictly convexifies every span the functionals
// separate while staying sqrt(4/3)-equivalent to the base norm.
class UredNorm {
public:
    UredNorm(const BlockSpace& base, std::vector<std::vector<double>> functionals);

    double eval(std::span<const double> x) const;
    std::vector<double> subgradient(std::span<const double> x) const;
    NormHandle handle() const;

    // upper equivalence factor sqrt(1 + sum 4^{-n}) <= sqrt(4/3)
    double upper_factor() const { return upper_factor_; }
    const std::vector<std::vector<double>>& functionals() const { return functionals_; }

private:
    const BlockSpace* base_;
    std::vector<std::vector<double>> functionals_;
    double upper_factor_ = 1.0;
};

// Validates the functional table (dual norm one, separating on the span of
// the first span_dim coordinates) and builds the renormed norm.
UredNorm ured_renorm(const BlockSpace& base, std::vector<std::vector<double>> functionals,
                     int span_dim = -1);

// Default table: coordinate functionals of the first `count` coordinates.
std::vector<std::vector<double>> coordinate_functionals(const BlockSpace& base, int count);

struct ContinuityProbe {
    ModulusTable table;
    double threshold = 0.1;
    bool pass = false;  // omega at the smallest scale within the threshold
};

ContinuityProbe uniform_continuity_probe(const VecMap& map, const BlockSpace& space,
                                         const std::function<std::vector<double>(Rng&)>& draw,
                                         std::vector<double> scales, std::size_t samples_per_scale,
                                         double threshold, std::uint64_t seed);

struct RotundityWitness {
    bool found = false;
    std::vector<double> x, y;
    double separation = 0.0;    // ||x - y||
    double midpoint_norm = 0.0;
};

// Searches the unit sphere for flat spots in a fixed direction z: pairs of
// unit vectors with x - y parallel to z, ||x+y||/2 >= 1 - eta and
// ||x - y|| >= min_separation. Returns the widest witness found.
RotundityWitness rotundity_probe(const NormHandle& norm, const std::vector<double>& z,
                                 double eta, double min_separation, std::size_t samples,
                                 std::uint64_t seed);

}  // namespace retractlab
