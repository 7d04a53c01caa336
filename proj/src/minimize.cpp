#include "retractlab/minimize.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "retractlab/rng.hpp"

namespace retractlab {

NormHandle ambient_norm_handle(const BlockSpace& space) {
    return {
        [&space](std::span<const double> x) { return space.ambient_norm(x); },
        [&space](std::span<const double> x) { return space.ambient_subgradient(x); },
    };
}

NormHandle pnorm_handle(PNorm kind) {
    BlockNorm n = BlockNorm::p(kind);
    return {
        [n](std::span<const double> x) { return n.eval(x); },
        [n](std::span<const double> x) { return n.subgradient(x); },
    };
}

namespace {

Eigen::MatrixXd frame_matrix(const std::vector<std::vector<double>>& frame, std::size_t dim) {
    Eigen::MatrixXd A(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(frame.size()));
    for (std::size_t j = 0; j < frame.size(); ++j) {
        if (frame[j].size() != dim) throw std::invalid_argument("frame vectors must share the dimension");
        for (std::size_t i = 0; i < dim; ++i)
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = frame[j][i];
    }
    return A;
}

std::vector<double> apply_frame(const std::vector<std::vector<double>>& frame,
                                std::span<const double> c, std::size_t dim) {
    std::vector<double> y(dim, 0.0);
    for (std::size_t j = 0; j < frame.size(); ++j) vec_axpy(y, c[j], frame[j]);
    return y;
}

void project_ball(std::vector<double>& c, double radius) {
    if (radius < 0.0) return;
    double n2 = 0.0;
    for (double v : c) n2 += v * v;
    n2 = std::sqrt(n2);
    if (n2 > radius) {
        double t = radius / n2;
        for (auto& v : c) v *= t;
    }
}

}  // namespace

SpanMinimum min_norm_over_span(const NormHandle& norm, std::span<const double> x,
                               const std::vector<std::vector<double>>& frame,
                               double ball_radius, const MinimizeConfig& cfg) {
    if (frame.empty()) throw std::invalid_argument("empty frame");
    const std::size_t dim = x.size();
    const std::size_t k = frame.size();

    Eigen::MatrixXd A = frame_matrix(frame, dim);
    Eigen::VectorXd xe(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) xe(static_cast<Eigen::Index>(i)) = x[i];
    // Euclidean least squares: exact answer for the 2-norm, a strong warm
    // start for every other norm.
    Eigen::VectorXd c0 = A.colPivHouseholderQr().solve(xe);

    auto objective = [&](const std::vector<double>& c) {
        return norm.eval(vec_sub(x, apply_frame(frame, c, dim)));
    };

    std::vector<std::vector<double>> starts;
    {
        std::vector<double> ls(k);
        for (std::size_t j = 0; j < k; ++j) ls[j] = c0(static_cast<Eigen::Index>(j));
        project_ball(ls, ball_radius);
        starts.push_back(std::move(ls));
        starts.emplace_back(k, 0.0);
        Rng rng(derive_seed(cfg.seed, 0x5eedu));
        for (int s = 0; s < cfg.starts; ++s) {
            std::vector<double> c(k);
            for (auto& v : c) v = rng.uniform(-1.0, 1.0);
            project_ball(c, ball_radius);
            starts.push_back(std::move(c));
        }
    }

    SpanMinimum best;
    best.value = std::numeric_limits<double>::infinity();
    int total_iters = 0;

    for (const auto& start : starts) {
        std::vector<double> c = start;
        std::vector<double> c_best = c;
        double f_best = objective(c);
        double step0 = std::max(f_best, 1e-6);
        int stalled = 0;
        for (int t = 1; t <= cfg.iterations; ++t, ++total_iters) {
            std::vector<double> residual = vec_sub(x, apply_frame(frame, c, dim));
            std::vector<double> g_amb = norm.subgradient(residual);
            // chain rule: d/dc ||x - A c|| = -A^T g
            std::vector<double> g(k, 0.0);
            for (std::size_t j = 0; j < k; ++j) g[j] = -vec_dot(frame[j], g_amb);
            double gn = std::sqrt(vec_dot(g, g));
            if (gn < 1e-15) break;
            double step = step0 / (gn * std::sqrt(static_cast<double>(t)));
            for (std::size_t j = 0; j < k; ++j) c[j] -= step * g[j];
            project_ball(c, ball_radius);
            double f = objective(c);
            if (f < f_best - cfg.tolerance) {
                f_best = f;
                c_best = c;
                stalled = 0;
            } else if (++stalled > 200) {
                break;
            }
        }
        if (f_best < best.value) {
            best.value = f_best;
            best.coefficients = c_best;
        }
    }

    best.point = apply_frame(frame, best.coefficients, dim);
    best.iterations = total_iters;
    return best;
}

std::vector<double> nearest_in_prefix(const BlockSpace& space, std::span<const double> x,
                                      int prefix_dim) {
    if (prefix_dim < 0 || prefix_dim > space.dim())
        throw std::out_of_range("prefix dimension out of range");
    std::vector<double> y(x.begin(), x.end());
    std::fill(y.begin() + prefix_dim, y.end(), 0.0);
    return y;
}

GridNearest grid_nearest_point(std::span<const double> x,
                               const std::function<bool(const std::vector<double>&)>& member,
                               int dim, double halfwidth, double resolution,
                               const std::function<double(std::span<const double>)>& norm) {
    if (dim < 1 || dim > 4) throw std::invalid_argument("grid oracle supports dims 1..4");
    if (resolution <= 0.0 || halfwidth <= 0.0) throw std::invalid_argument("bad grid parameters");

    const int side = 17;  // grid points per axis and level
    std::vector<double> centre(static_cast<std::size_t>(dim), 0.0);
    double w = halfwidth;

    GridNearest best;
    best.point.assign(static_cast<std::size_t>(dim), 0.0);
    if (!member(best.point)) throw std::invalid_argument("grid oracle assumes 0 is feasible");
    best.value = norm(vec_sub(x, best.point));

    while (true) {
        const double step = 2.0 * w / (side - 1);
        std::vector<int> idx(static_cast<std::size_t>(dim), 0);
        std::vector<double> y(static_cast<std::size_t>(dim));
        bool done = false;
        while (!done) {
            for (int d = 0; d < dim; ++d)
                y[static_cast<std::size_t>(d)] =
                    centre[static_cast<std::size_t>(d)] - w + step * idx[static_cast<std::size_t>(d)];
            if (member(y)) {
                double v = norm(vec_sub(x, y));
                if (v < best.value) {
                    best.value = v;
                    best.point = y;
                }
            }
            int d = 0;
            for (; d < dim; ++d) {
                if (++idx[static_cast<std::size_t>(d)] < side) break;
                idx[static_cast<std::size_t>(d)] = 0;
            }
            done = d == dim;
        }
        if (step <= resolution) break;
        centre = best.point;
        w = 2.0 * step;  // refined window comfortably covers the coarse cell
    }
    return best;
}

}  // namespace retractlab
