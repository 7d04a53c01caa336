#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "retractlab/rng.hpp"

namespace retractlab {

enum class PNorm { One, Two, Inf };

std::string pnorm_name(PNorm p);
PNorm pnorm_from_name(const std::string& name);

// Polyhedral norm |x| = max_j |<row_j, x>|. Rows are interpreted as a
// symmetric family (each row stands for +/- itself).
struct FunctionalTable {
    std::vector<std::vector<double>> rows;
};

// Norm of a single block: one of the three p-norms or a functional table.
class BlockNorm {
public:
    static BlockNorm p(PNorm kind);
    static BlockNorm table(FunctionalTable t);

    bool is_p() const { return !is_table_; }
    PNorm pkind() const { return p_; }
    const FunctionalTable& functionals() const { return table_; }

    double eval(std::span<const double> x) const;
    // Dual norm / a norm-one point v with <g,v> = dual(g). p-norms only;
    // functional-table blocks have no closed-form support map.
    double dual(std::span<const double> g) const;
    std::vector<double> norming_point(std::span<const double> g) const;
    // One subgradient of the norm at x (any selection works for descent).
    std::vector<double> subgradient(std::span<const double> x) const;

private:
    bool is_table_ = false;
    PNorm p_ = PNorm::Two;
    FunctionalTable table_;
};

// Finite-dimensional space split into consecutive coordinate blocks. The
// ambient norm is the p-sum of the block norms; canonical projections keep a
// prefix of blocks and are nonexpansive for every p-sum rule, which is what
// the monotone flag asserts.
class BlockSpace {
public:
    BlockSpace(std::vector<int> dims, std::vector<BlockNorm> norms, PNorm ambient_rule,
               bool monotone = true);

    // `blocks` one-dimensional blocks, the common degenerate model.
    static BlockSpace ones(int blocks, PNorm block_kind, PNorm ambient_rule);
    static BlockSpace uniform(int blocks, int dim_each, PNorm block_kind, PNorm ambient_rule);

    int dim() const { return dim_; }
    int block_count() const { return static_cast<int>(dims_.size()); }
    int block_dim(int i) const { return dims_[i]; }
    int block_offset(int i) const { return offsets_[i]; }
    const BlockNorm& block(int i) const { return norms_[i]; }
    PNorm ambient_rule() const { return ambient_; }
    bool monotone() const { return monotone_; }

    std::span<const double> block_view(int i, std::span<const double> x) const;

    double block_norm(int i, std::span<const double> x) const;
    double ambient_norm(std::span<const double> x) const;
    double distance(std::span<const double> x, std::span<const double> y) const;
    // Dual of the ambient norm (q-sum of block duals); p-norm blocks only.
    double ambient_dual_norm(std::span<const double> g) const;
    std::vector<double> ambient_subgradient(std::span<const double> x) const;

    // Canonical projection onto the first n blocks (n = 0 gives 0).
    std::vector<double> truncate(std::span<const double> x, int n) const;
    void truncate_inplace(std::vector<double>& x, int n) const;
    // Component of x in block i, zero-padded to full length.
    std::vector<double> block_component(std::span<const double> x, int i) const;
    std::vector<std::vector<double>> block_components(std::span<const double> x) const;
    // sum_{i<=m} ||x_i||  (block norms of the components)
    double block_norm_sum(std::span<const double> x, int m) const;

    // Samplers. Norm-ball samplers are exact for p-norm blocks.
    std::vector<double> sample_box(Rng& rng, double halfwidth) const;
    std::vector<double> sample_block_ball(Rng& rng, int i, double radius) const;
    std::vector<double> sample_block_sphere(Rng& rng, int i, double radius) const;
    std::vector<double> sample_ambient_sphere(Rng& rng) const;
    std::vector<double> sample_ambient_ball(Rng& rng, double radius) const;

    std::string to_text() const;
    static BlockSpace from_text(const std::string& text);

    bool same_layout(const BlockSpace& other) const;

private:
    std::vector<int> dims_;
    std::vector<int> offsets_;
    std::vector<BlockNorm> norms_;
    PNorm ambient_;
    bool monotone_;
    int dim_ = 0;
};

// A coefficient vector tied to its space.
struct Point {
    std::vector<double> coeffs;
    const BlockSpace* space = nullptr;

    double norm() const { return space->ambient_norm(coeffs); }
    Point truncated(int n) const { return {space->truncate(coeffs, n), space}; }
    std::vector<Point> components() const;
};

std::string points_to_csv(const std::vector<Point>& pts);
std::vector<Point> points_from_csv(const std::string& csv, const BlockSpace& space);

// Default constant A_m = 2m in ||P_m x||_{l1-block-sum} <= A_m ||P_m x||,
// valid for any monotone decomposition.
inline double default_block_sum_constant(int m) { return 2.0 * m; }

// x if ||x|| <= rho, else the boundary point rho x / ||x||. 2-Lipschitz in
// every norm.
std::vector<double> radial_projection(std::span<const double> x, double rho,
                                      const std::function<double(std::span<const double>)>& norm);
std::vector<double> radial_projection(const BlockSpace& space, std::span<const double> x, double rho);

// Elementwise helpers shared across the library.
std::vector<double> vec_add(std::span<const double> a, std::span<const double> b);
std::vector<double> vec_sub(std::span<const double> a, std::span<const double> b);
std::vector<double> vec_scale(std::span<const double> a, double t);
void vec_axpy(std::vector<double>& y, double t, std::span<const double> x);
double vec_dot(std::span<const double> a, std::span<const double> b);

}  // namespace retractlab
