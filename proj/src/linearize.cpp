#include "retractlab/linearize.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace retractlab {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Ambient model restricted to the first `dim` coordinates; partial blocks
// keep their p-norm on the surviving coordinates.
BlockSpace prefix_space(const BlockSpace& space, int dim) {
    if (dim < 1 || dim > space.dim()) throw std::out_of_range("prefix dimension out of range");
    std::vector<int> dims;
    std::vector<BlockNorm> norms;
    int off = 0;
    for (int k = 0; k < space.block_count() && off < dim; ++k) {
        int take = std::min(space.block_dim(k), dim - off);
        if (take < space.block_dim(k) && !space.block(k).is_p())
            throw std::invalid_argument("cannot cut a table-norm block");
        dims.push_back(take);
        norms.push_back(take < space.block_dim(k) ? BlockNorm::p(space.block(k).pkind())
                                                  : space.block(k));
        off += take;
    }
    return BlockSpace(dims, norms, space.ambient_rule(), space.monotone());
}

}  // namespace

SmoothedMap::SmoothedMap(VecMap base, BlockSpace domain, double tau, std::size_t samples,
                         std::uint64_t seed, double base_lip, double base_deviation,
                         double input_radius)
    : base_(std::move(base)),
      domain_(std::move(domain)),
      tau_(tau),
      samples_(samples),
      seed_(seed),
      input_radius_(input_radius) {
    if (!(tau_ > 0.0)) throw std::invalid_argument("smoothing radius must be positive");
    if (samples_ == 0) throw std::invalid_argument("smoothing needs at least one sample");
    if (base_lip < 0.0 || base_deviation < 0.0)
        throw std::invalid_argument("budgets must be nonnegative");
    const double d = static_cast<double>(domain_.dim());
    lip_budget_ = base_lip == 0.0 ? 0.0
                                  : base_lip * (1.0 + d * base_deviation / (base_lip * tau_));
    deviation_budget_ = base_lip * tau_ + 2.0 * base_deviation;
}

std::vector<double> SmoothedMap::operator()(std::span<const double> x) const {
    const int d = domain_.dim();
    if (static_cast<int>(x.size()) < d) throw std::invalid_argument("input below the domain dimension");
    if (input_radius_ >= 0.0 &&
        domain_.ambient_norm(x.first(static_cast<std::size_t>(d))) > input_radius_ + 1e-12)
        throw std::domain_error("evaluation outside the smoothed map's domain");

    const std::uint64_t point_seed = derive_seed(seed_, hash_doubles(x, 0x6d6f6c6cull));
    std::vector<double> probe(x.begin(), x.end());
    std::vector<double> acc;
    for (std::size_t i = 0; i < samples_; ++i) {
        Rng rng(derive_seed(point_seed, i));
        std::vector<double> u = domain_.sample_ambient_ball(rng, 1.0);
        for (int j = 0; j < d; ++j)
            probe[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)] + tau_ * u[static_cast<std::size_t>(j)];
        std::vector<double> v = base_(probe);
        if (acc.empty()) acc.assign(v.size(), 0.0);
        if (v.size() != acc.size()) throw std::runtime_error("base map changed its output dimension");
        vec_axpy(acc, 1.0, v);
    }
    for (auto& c : acc) c /= static_cast<double>(samples_);
    return acc;
}

VecMap SmoothedMap::map() const {
    return [self = *this](const std::vector<double>& x) { return self(x); };
}

SmoothedMap begun_smooth(VecMap base, BlockSpace domain, double tau, std::size_t samples,
                         std::uint64_t seed, double base_lip, double base_deviation,
                         double input_radius) {
    return SmoothedMap(std::move(base), std::move(domain), tau, samples, seed, base_lip,
                       base_deviation, input_radius);
}

double Frame::coefficient(int i, std::span<const double> x) const {
    return vec_dot(functionals[static_cast<std::size_t>(i)], x);
}

Frame canonical_frame(const BlockSpace& space, int base_count, int total) {
    if (base_count < 1 || base_count > total || total > space.dim())
        throw std::out_of_range("frame sizes out of range");
    Frame f;
    f.base_count = base_count;
    for (int i = 0; i < total; ++i) {
        std::vector<double> e(static_cast<std::size_t>(space.dim()), 0.0);
        e[static_cast<std::size_t>(i)] = 1.0;
        f.vectors.push_back(e);
        f.functionals.push_back(std::move(e));
    }
    validate_frame(f, space);
    return f;
}

void validate_frame(const Frame& frame, const BlockSpace& space, double tol) {
    const int phi = frame.size();
    if (phi == 0 || static_cast<int>(frame.functionals.size()) != phi)
        throw std::invalid_argument("frame vectors and functionals must pair up");
    if (frame.base_count < 1 || frame.base_count > phi)
        throw std::invalid_argument("frame base count out of range");
    for (int i = 0; i < phi; ++i) {
        if (std::abs(space.ambient_norm(frame.vectors[static_cast<std::size_t>(i)]) - 1.0) > tol)
            throw std::invalid_argument("frame vector " + std::to_string(i + 1) + " is not normalized");
        for (int j = 0; j < phi; ++j) {
            double want = i == j ? 1.0 : 0.0;
            if (std::abs(frame.coefficient(i, frame.vectors[static_cast<std::size_t>(j)]) - want) > tol)
                throw std::invalid_argument("frame is not biorthogonal at pair " +
                                            std::to_string(i + 1) + "," + std::to_string(j + 1));
        }
    }
    for (int i = 0; i < frame.base_count; ++i) {
        if (std::abs(space.ambient_dual_norm(frame.functionals[static_cast<std::size_t>(i)]) - 1.0) > tol)
            throw std::invalid_argument("functional " + std::to_string(i + 1) +
                                        " of the Auerbach prefix is not normalized");
    }
}

AveragingBox::AveragingBox(Frame frame, double base_radius, double thickness,
                           const BlockSpace& space)
    : frame_(std::move(frame)), base_radius_(base_radius), thickness_(thickness), space_(&space) {
    if (!(base_radius_ > 0.0)) throw std::invalid_argument("box base radius must be positive");
    if (thickness_ < 0.0) throw std::invalid_argument("box thickness must be nonnegative");
    validate_frame(frame_, space);
}

std::vector<double> AveragingBox::sample(Rng& rng) const {
    const int sigma = base_count();
    const int phi = total_count();
    std::vector<double> w(static_cast<std::size_t>(sigma));
    rng.fill_simplex(w);
    const double radial = std::pow(rng.uniform01(), 1.0 / static_cast<double>(sigma));
    std::vector<double> out(static_cast<std::size_t>(space_->dim()), 0.0);
    for (int i = 0; i < sigma; ++i)
        vec_axpy(out, rng.sign() * base_radius_ * radial * w[static_cast<std::size_t>(i)],
                 frame_.vectors[static_cast<std::size_t>(i)]);
    for (int i = sigma; i < phi; ++i)
        vec_axpy(out, rng.uniform(-thickness_, thickness_), frame_.vectors[static_cast<std::size_t>(i)]);
    return out;
}

double AveragingBox::volume() const {
    const int sigma = base_count();
    const int phi = total_count();
    double v = std::pow(2.0, phi) * std::pow(thickness_, phi - sigma);
    for (int i = 1; i <= sigma; ++i) v *= base_radius_ / static_cast<double>(i);
    return v;
}

double AveragingBox::section_volume(int i) const {
    const int sigma = base_count();
    const int phi = total_count();
    if (i < 0 || i >= sigma) throw std::out_of_range("section drops a base direction");
    double v = std::pow(2.0, phi - 1) * std::pow(thickness_, phi - sigma);
    for (int k = 1; k <= sigma - 1; ++k) v *= base_radius_ / static_cast<double>(k);
    return v;
}

double AveragingBox::diameter() const {
    return 2.0 * (base_radius_ + thickness_ * static_cast<double>(total_count() - base_count()));
}

AveragingBox build_box(Frame frame, double base_radius, double thickness,
                       const BlockSpace& space) {
    return AveragingBox(std::move(frame), base_radius, thickness, space);
}

std::vector<double> AveragedOperator::apply(const Frame& frame, std::span<const double> x) const {
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 0; i < columns.size(); ++i)
        vec_axpy(out, frame.coefficient(static_cast<int>(i), x), columns[i]);
    return out;
}

AveragedOperator average_derivative(const VecMap& map, const AveragingBox& box, int directions,
                                    std::size_t samples, double fd_step, std::uint64_t seed,
                                    DerivativeEstimator estimator, int workers) {
    const Frame& frame = box.frame();
    if (directions < 1 || directions > frame.size())
        throw std::out_of_range("direction count out of range");
    if (samples == 0) throw std::invalid_argument("averaging needs samples");
    if (!(fd_step > 1e-300)) throw std::invalid_argument("finite-difference step underflow");
    if (workers < 1) throw std::invalid_argument("worker count must be positive");

    const double chord_floor = 1e-7 * box.base_radius();
    const std::size_t total = static_cast<std::size_t>(directions) * samples;
    // one slot per (direction, sample); filled in parallel, reduced in index order
    std::vector<std::optional<std::vector<double>>> slot(total);

    auto run = [&](std::size_t begin_idx, std::size_t stride) {
        for (std::size_t idx = begin_idx; idx < total; idx += stride) {
            const int d = static_cast<int>(idx / samples);
            const std::size_t s = idx % samples;
            Rng rng(derive_seed(seed, (static_cast<std::uint64_t>(d) << 40) + s));
            std::vector<double> x = box.sample(rng);
            const auto& dir = frame.vectors[static_cast<std::size_t>(d)];

            if (estimator == DerivativeEstimator::Segment && d < frame.base_count) {
                // chord through x along the base direction; the endpoint
                // difference over the chord length is exact for linear maps
                double t = 0.0;
                for (int j = 0; j < frame.base_count; ++j)
                    if (j != d) t += std::abs(frame.coefficient(j, x));
                const double reach = box.base_radius() - t;
                if (reach < chord_floor) continue;  // skip, counted via empty slot
                const double c = frame.coefficient(d, x);
                std::vector<double> hi = x, lo = x;
                vec_axpy(hi, reach - c, dir);
                vec_axpy(lo, -reach - c, dir);
                std::vector<double> diff = vec_sub(map(hi), map(lo));
                for (auto& v : diff) v /= 2.0 * reach;
                slot[idx] = std::move(diff);
                continue;
            }

            double h = fd_step;
            for (int attempt = 0; attempt < 6; ++attempt) {
                try {
                    std::vector<double> hi = x, lo = x;
                    vec_axpy(hi, h, dir);
                    vec_axpy(lo, -h, dir);
                    std::vector<double> diff = vec_sub(map(hi), map(lo));
                    for (auto& v : diff) v /= 2.0 * h;
                    slot[idx] = std::move(diff);
                    break;
                } catch (const std::domain_error&) {
                    h *= 0.5;  // pulled outside the trusted region: shrink and retry
                }
            }
        }
    };

    if (workers == 1) {
        run(0, 1);
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr first_error;
        std::mutex gate;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                try {
                    run(static_cast<std::size_t>(w), static_cast<std::size_t>(workers));
                } catch (...) {
                    std::lock_guard<std::mutex> lock(gate);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    AveragedOperator op;
    op.fd_step = fd_step;
    op.workers = workers;
    op.estimator = estimator;
    op.columns.assign(static_cast<std::size_t>(directions), {});
    op.used.assign(static_cast<std::size_t>(directions), 0);
    op.skipped.assign(static_cast<std::size_t>(directions), 0);
    for (std::size_t idx = 0; idx < total; ++idx) {
        const std::size_t d = idx / samples;
        if (!slot[idx]) {
            ++op.skipped[d];
            continue;
        }
        if (op.columns[d].empty()) op.columns[d].assign(slot[idx]->size(), 0.0);
        vec_axpy(op.columns[d], 1.0, *slot[idx]);
        ++op.used[d];
    }
    for (std::size_t d = 0; d < op.columns.size(); ++d) {
        if (op.used[d] == 0)
            throw std::runtime_error("no usable samples along direction " + std::to_string(d + 1));
        for (auto& v : op.columns[d]) v /= static_cast<double>(op.used[d]);
    }
    return op;
}

namespace {

// unit vectors of span(vectors) for norm estimation: random combinations plus
// sign-pattern vertices and the frame directions themselves
std::vector<std::vector<double>> sphere_probes(const std::vector<std::vector<double>>& vectors,
                                               const BlockSpace& space, std::size_t random_count,
                                               std::uint64_t seed) {
    const std::size_t k = vectors.size();
    std::vector<std::vector<double>> probes;
    auto push = [&](std::vector<double> v) {
        double n = space.ambient_norm(v);
        if (n < 1e-12) return;
        for (auto& c : v) c /= n;
        probes.push_back(std::move(v));
    };
    for (const auto& v : vectors) push(v);
    if (k <= 10) {
        for (std::uint64_t bits = 0; bits < (1ull << k); ++bits) {
            std::vector<double> v(vectors.front().size(), 0.0);
            for (std::size_t i = 0; i < k; ++i)
                vec_axpy(v, (bits >> i) & 1ull ? 1.0 : -1.0, vectors[i]);
            push(std::move(v));
        }
    }
    for (std::size_t s = 0; s < random_count; ++s) {
        Rng rng(derive_seed(seed, 0x5e70000u + s));
        std::vector<double> v(vectors.front().size(), 0.0);
        for (std::size_t i = 0; i < k; ++i) vec_axpy(v, rng.normal(), vectors[i]);
        push(std::move(v));
    }
    return probes;
}

}  // namespace

ProjectionCertificate extract_projection(const AveragedOperator& op, const Frame& frame,
                                         const BlockSpace& space, double lip, double epsilon,
                                         std::uint64_t seed) {
    const int sigma = frame.base_count;
    const int phi = frame.size();
    if (static_cast<int>(op.columns.size()) < phi)
        throw std::invalid_argument("averaged operator is missing frame directions");
    if (!(lip > 0.0)) throw std::invalid_argument("Lipschitz reference must be positive");
    if (!(epsilon > 0.0) || epsilon > 1.0) throw std::domain_error("epsilon must lie in (0, 1]");

    ProjectionCertificate cert;
    cert.base_count = sigma;
    cert.total_count = phi;
    cert.lip_reference = lip;
    cert.epsilon = epsilon;
    cert.bound_4l = 4.0 * lip;
    cert.bound_8l = epsilon < 1.0 ? 8.0 * lip / (1.0 - epsilon)
                                  : std::numeric_limits<double>::infinity();

    // how far the averaged operator moves the base subspace
    std::vector<std::vector<double>> base_vecs(frame.vectors.begin(),
                                               frame.vectors.begin() + sigma);
    for (const auto& x : sphere_probes(base_vecs, space, 256, derive_seed(seed, 0xE5))) {
        std::vector<double> moved = vec_sub(op.apply(frame, x), x);
        cert.restriction_gap = std::max(cert.restriction_gap, space.ambient_norm(moved));
    }
    cert.half_condition = cert.restriction_gap <= 0.5 + 1e-9;

    Eigen::MatrixXd L(sigma, sigma);
    Eigen::MatrixXd N(sigma, phi);
    for (int i = 0; i < sigma; ++i)
        for (int j = 0; j < phi; ++j) {
            N(i, j) = frame.coefficient(i, op.columns[static_cast<std::size_t>(j)]);
            if (j < sigma) L(i, j) = N(i, j);
        }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(L);
    lu.setThreshold(1e-10);
    if (lu.rank() < sigma) {
        cert.note = "restriction to the base subspace is singular; no projection extracted";
        return cert;
    }
    Eigen::MatrixXd M = lu.solve(N);
    cert.matrix.assign(static_cast<std::size_t>(sigma),
                       std::vector<double>(static_cast<std::size_t>(phi), 0.0));
    for (int i = 0; i < sigma; ++i)
        for (int j = 0; j < phi; ++j)
            cert.matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = M(i, j);

    auto project = [&](std::span<const double> x) {
        std::vector<double> out(x.size(), 0.0);
        for (int i = 0; i < sigma; ++i) {
            double c = 0.0;
            for (int j = 0; j < phi; ++j) c += M(i, j) * frame.coefficient(j, x);
            vec_axpy(out, c, frame.vectors[static_cast<std::size_t>(i)]);
        }
        return out;
    };

    for (const auto& x : sphere_probes(frame.vectors, space, 2048, derive_seed(seed, 0x4e))) {
        std::vector<double> px = project(x);
        cert.norm_estimate = std::max(cert.norm_estimate, space.ambient_norm(px));
        std::vector<double> pp = vec_sub(project(px), px);
        cert.projection_residual = std::max(cert.projection_residual, space.ambient_norm(pp));
    }
    for (const auto& x : sphere_probes(base_vecs, space, 256, derive_seed(seed, 0x1d))) {
        std::vector<double> r = vec_sub(project(x), x);
        cert.identity_residual = std::max(cert.identity_residual, space.ambient_norm(r));
    }

    cert.lambda_estimate = epsilon < 1.0 ? 2.0 / (1.0 - epsilon) * cert.norm_estimate
                                         : std::numeric_limits<double>::infinity();
    cert.pass_4l = cert.norm_estimate <= cert.bound_4l * (1.0 + 1e-9);
    cert.pass_8l = cert.lambda_estimate <= cert.bound_8l * (1.0 + 1e-9) ||
                   (std::isinf(cert.lambda_estimate) && std::isinf(cert.bound_8l));
    if (epsilon == 1.0) cert.note = "lambda bound is vacuous at epsilon = 1";
    return cert;
}

std::string ProjectionCertificate::to_text() const {
    std::ostringstream os;
    os << "projection v1\n";
    os << "base_count " << base_count << "\n";
    os << "total_count " << total_count << "\n";
    os << "norm_estimate " << fmt(norm_estimate) << "\n";
    os << "restriction_gap " << fmt(restriction_gap) << "\n";
    os << "identity_residual " << fmt(identity_residual) << "\n";
    os << "projection_residual " << fmt(projection_residual) << "\n";
    os << "bound_4l " << fmt(bound_4l) << "\n";
    os << "bound_8l " << fmt(bound_8l) << "\n";
    // the Lipschitz reference is an empirical lower bound, so the bounds are
    // also quoted at 1.25x the estimate as a safety margin
    os << "bound_4l_margin " << fmt(bound_4l * 1.25) << "\n";
    os << "bound_8l_margin " << fmt(bound_8l * 1.25) << "\n";
    os << "lambda_estimate " << fmt(lambda_estimate) << "\n";
    os << "half_condition " << (half_condition ? 1 : 0) << "\n";
    os << "pass_4l " << (pass_4l ? 1 : 0) << "\n";
    os << "pass_8l " << (pass_8l ? 1 : 0) << "\n";
    if (!note.empty()) os << "note " << note << "\n";
    return os.str();
}

std::string ProjectionCertificate::matrix_csv() const {
    std::ostringstream os;
    os << "# projection-matrix v1\n";
    os << "# base_count " << base_count << "\n";
    os << "# total_count " << total_count << "\n";
    os << "# layout row-major frame-coordinates\n";
    for (const auto& row : matrix) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) os << ",";
            os << fmt(row[j]);
        }
        os << "\n";
    }
    return os.str();
}

PolyhedralNorm epsnet_polyhedral_norm(const BlockSpace& space, double epsilon,
                                      std::size_t candidates, std::uint64_t seed) {
    if (space.dim() > 4) throw std::invalid_argument("greedy covering is limited to dimension 4");
    if (!(epsilon > 0.0) || !(epsilon < 1.0)) throw std::domain_error("epsilon must lie in (0, 1)");
    if (candidates == 0) throw std::invalid_argument("need candidate functionals");

    // attaining functionals sampled through the subgradient, thinned greedily
    // at scale just under epsilon so fresh sphere points stay covered
    const double keep_distance = 0.95 * epsilon;
    std::vector<std::vector<double>> net;
    for (std::size_t i = 0; i < candidates; ++i) {
        Rng rng(derive_seed(seed, i));
        std::vector<double> u = space.sample_ambient_sphere(rng);
        std::vector<double> f = space.ambient_subgradient(u);
        double closest = std::numeric_limits<double>::infinity();
        for (const auto& g : net) {
            closest = std::min(closest, std::min(space.ambient_dual_norm(vec_sub(f, g)),
                                                 space.ambient_dual_norm(vec_add(f, g))));
            if (closest <= keep_distance) break;
        }
        if (closest > keep_distance) net.push_back(std::move(f));
    }

    FunctionalTable table{net};
    BlockNorm surrogate = BlockNorm::table(table);
    for (std::size_t v = 0; v < 256; ++v) {
        Rng rng(derive_seed(seed, 0x5e7f000u + v));
        std::vector<double> x = space.sample_ambient_sphere(rng);
        const double val = surrogate.eval(x);
        if (val > 1.0 + 1e-9 || val < (1.0 - epsilon) * (1.0 - 1e-9)) {
            std::ostringstream os;
            os << "polyhedral net too coarse at witness (";
            for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << fmt(x[i]);
            os << "): surrogate " << fmt(val) << " vs norm 1";
            throw std::runtime_error(os.str());
        }
    }
    return {std::move(table), epsilon, net.size()};
}

PiCertificate pi_certificate(const DiamondCompact& hull, const VecMap& retraction, double lip,
                             double epsilon, const std::vector<int>& sigma,
                             const std::vector<int>& stages, const PiPipelineConfig& cfg) {
    if (stages.empty()) throw std::invalid_argument("no stages requested");
    if (!(lip > 0.0)) throw std::invalid_argument("Lipschitz reference must be positive");
    const BlockSpace& space = hull.space();
    BoundedSet set = bounded_set_from_hull(hull);
    FundamentalSequence beta = FundamentalSequence::standard(space, space.dim());

    const int max_stage = *std::max_element(stages.begin(), stages.end());
    SmallnessCertificate small = check_small(set, beta, epsilon, sigma, max_stage);
    for (int n : stages) {
        if (n < 1) throw std::invalid_argument("stage indices start at 1");
        if (!small.rows[static_cast<std::size_t>(n - 1)].pass)
            throw std::invalid_argument("smallness precondition fails at stage " + std::to_string(n));
    }

    PiCertificate cert;
    cert.epsilon = epsilon;
    cert.lip = lip;

    for (int n : stages) {
        PiStageReport stage;
        stage.n = n;
        stage.sigma_n = sigma[static_cast<std::size_t>(n - 1)];
        try {
            const int m = stage.sigma_n;
            stage.phi_n = cfg.phi_override > 0 ? cfg.phi_override : phi_at(m, epsilon);
            if (stage.phi_n < m)
                throw std::runtime_error("witness dimension below the base dimension");
            if (stage.phi_n > space.dim())
                throw std::runtime_error("witness dimension " + std::to_string(stage.phi_n) +
                                         " exceeds the model dimension");
            const int phi_n = static_cast<int>(stage.phi_n);

            stage.height = height(set, beta, m);
            stage.inner_radius = inner_radius(set, beta, m);
            if (!(stage.inner_radius > 0.0)) throw std::runtime_error("stage has no interior");
            if (!(stage.height > 0.0)) throw std::runtime_error("stage has zero height");
            stage.tau = static_cast<double>(stage.phi_n) * stage.height / lip;
            stage.rho = stage.height * (static_cast<double>(stage.phi_n) + 2.0);
            stage.seam_bound = static_cast<double>(m) * stage.rho / stage.inner_radius;

            Frame frame = canonical_frame(space, m, phi_n);
            // retract, then project onto the first m coordinates (the target E)
            VecMap base = [m, retraction](const std::vector<double>& x) {
                std::vector<double> out = retraction(x);
                std::fill(out.begin() + m, out.end(), 0.0);
                return out;
            };
            SmoothedMap smoothed =
                begun_smooth(base, prefix_space(space, phi_n), stage.tau, cfg.smoothing_samples,
                             derive_seed(cfg.seed, 0x51a9e00u + static_cast<std::uint64_t>(n)),
                             lip, stage.height);
            stage.smoothed_lip_budget = smoothed.lip_budget();
            VecMap smooth_map = smoothed.map();

            for (std::size_t t = 0; t < cfg.thickness_ladder.size(); ++t) {
                const double delta = cfg.thickness_ladder[t];
                AveragingBox box(frame, stage.inner_radius, delta, space);
                const double fd = 1e-4 * box.diameter();
                AveragedOperator avg = average_derivative(
                    smooth_map, box, phi_n, cfg.box_samples, fd,
                    derive_seed(cfg.seed, (static_cast<std::uint64_t>(n) << 8) + t),
                    cfg.estimator, cfg.workers);

                double seam_max = 0.0;
                std::vector<double> seam;
                for (int i = 0; i < m; ++i) {
                    std::vector<double> diff =
                        vec_sub(avg.columns[static_cast<std::size_t>(i)],
                                frame.vectors[static_cast<std::size_t>(i)]);
                    seam.push_back(space.ambient_norm(diff));
                    seam_max = std::max(seam_max, seam.back());
                }
                ProjectionCertificate proj = extract_projection(
                    avg, frame, space, lip, epsilon, derive_seed(cfg.seed, 0xF00 + t));
                stage.trend.push_back({delta, seam_max, proj.norm_estimate});
                if (t + 1 == cfg.thickness_ladder.size()) {
                    stage.seam = std::move(seam);
                    stage.seam_max = seam_max;
                    stage.projection = std::move(proj);
                }
            }

            bool trend_ok = true;
            for (std::size_t t = 1; t < stage.trend.size(); ++t)
                trend_ok = trend_ok && stage.trend[t].seam_max <=
                                           stage.trend[t - 1].seam_max + cfg.seam_tolerance;
            stage.pass = stage.projection.pass_4l && stage.projection.half_condition &&
                         stage.seam_max <= stage.seam_bound + cfg.seam_tolerance;
            std::ostringstream note;
            if (!trend_ok) note << "seam did not settle along the thickness ladder; ";
            if (!stage.projection.note.empty()) note << stage.projection.note << "; ";
            stage.note = note.str();
            if (!stage.note.empty()) stage.note.erase(stage.note.size() - 2);
        } catch (const std::exception& e) {
            stage.pass = false;
            stage.note = e.what();
        }
        cert.lambda_bound = std::max(cert.lambda_bound, stage.projection.lambda_estimate);
        cert.stages.push_back(std::move(stage));
    }

    cert.verdict = !cert.stages.empty() &&
                   std::all_of(cert.stages.begin(), cert.stages.end(),
                               [](const PiStageReport& s) { return s.pass; });
    return cert;
}

std::string PiCertificate::to_text() const {
    std::ostringstream os;
    os << "pi-certificate v1\n";
    os << "epsilon " << fmt(epsilon) << "\n";
    os << "lip " << fmt(lip) << "\n";
    os << "stages " << stages.size() << "\n";
    os << "columns n sigma phi inner_radius height tau rho lip2 seam_bound seam_max norm "
          "lambda pass\n";
    for (const auto& s : stages) {
        os << s.n << " " << s.sigma_n << " " << s.phi_n << " " << fmt(s.inner_radius) << " "
           << fmt(s.height) << " " << fmt(s.tau) << " " << fmt(s.rho) << " "
           << fmt(s.smoothed_lip_budget) << " " << fmt(s.seam_bound) << " " << fmt(s.seam_max)
           << " " << fmt(s.projection.norm_estimate) << " " << fmt(s.projection.lambda_estimate)
           << " " << (s.pass ? 1 : 0) << "\n";
    }
    for (const auto& s : stages)
        for (const auto& t : s.trend)
            os << "trend " << s.n << " " << fmt(t.delta) << " " << fmt(t.seam_max) << " "
               << fmt(t.norm_estimate) << "\n";
    os << "lambda_bound " << fmt(lambda_bound) << "\n";
    os << "verdict " << (verdict ? "PASS" : "FAIL") << "\n";
    for (const auto& s : stages)
        if (!s.note.empty()) os << "note stage " << s.n << ": " << s.note << "\n";
    if (!note.empty()) os << "note " << note << "\n";
    return os.str();
}

}  // namespace retractlab
