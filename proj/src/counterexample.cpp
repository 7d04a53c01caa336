#include "retractlab/counterexample.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "retractlab/minimize.hpp"
#include "retractlab/schedule.hpp"

namespace retractlab {

namespace {

constexpr int kNetCap = 4096;
constexpr double kPi = 3.14159265358979323846;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double angle_between(std::span<const double> u, std::span<const double> v) {
    const double c = std::clamp(vec_dot(u, v), -1.0, 1.0);
    return std::acos(c);
}

// deterministic candidate pool on the unit sphere: the signed coordinate
// directions first, then a fine grid (circle) or seeded gaussian draws
std::vector<std::vector<double>> sphere_pool(int n, std::uint64_t seed) {
    std::vector<std::vector<double>> pool;
    for (int i = 0; i < n; ++i)
        for (double s : {1.0, -1.0}) {
            std::vector<double> e(static_cast<std::size_t>(n), 0.0);
            e[static_cast<std::size_t>(i)] = s;
            pool.push_back(std::move(e));
        }
    if (n == 2) {
        const int grid = 2048;
        for (int k = 0; k < grid; ++k) {
            const double t = 2.0 * kPi * k / grid;
            pool.push_back({std::cos(t), std::sin(t)});
        }
    } else if (n >= 3) {
        const std::size_t draws = 4096 * static_cast<std::size_t>(n);
        for (std::size_t k = 0; k < draws; ++k) {
            Rng rng(derive_seed(seed, 0xb10c0000ull + k));
            std::vector<double> v = rng.gaussian_vector(n);
            double norm = std::sqrt(vec_dot(v, v));
            if (norm < 1e-12) continue;
            for (auto& c : v) c /= norm;
            pool.push_back(std::move(v));
        }
    }
    return pool;
}

std::vector<double> least_squares_coefficients(const ModelBlock& block,
                                               std::span<const double> x, double* residual_sup) {
    Eigen::MatrixXd A(block.dim, block.n);
    Eigen::VectorXd b(block.dim);
    for (int j = 0; j < block.dim; ++j) {
        b(j) = x[static_cast<std::size_t>(j)];
        for (int i = 0; i < block.n; ++i)
            A(j, i) = block.frame[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    if (residual_sup) *residual_sup = (b - A * c).lpNorm<Eigen::Infinity>();
    return {c.data(), c.data() + c.size()};
}

void expect(std::istream& in, const char* token) {
    std::string got;
    in >> got;
    if (got != token)
        throw std::runtime_error(std::string("malformed model text: expected '") + token +
                                 "', got '" + got + "'");
}

}  // namespace

double ModelBlock::embed_norm(std::span<const double> c) const {
    double best = 0.0;
    for (int j = 0; j < dim; ++j) {
        double v = 0.0;
        for (int i = 0; i < n; ++i)
            v += c[static_cast<std::size_t>(i)] * frame[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        best = std::max(best, std::abs(v));
    }
    return best;
}

std::string ModelBlock::to_text() const {
    std::ostringstream os;
    os << "model-block v1\n";
    os << "n " << n << "\n";
    os << "dim " << dim << "\n";
    os << "eps_target " << fmt(eps_target) << "\n";
    os << "eps_embed " << fmt(eps_embed) << "\n";
    for (const auto& row : frame) {
        os << "frame";
        for (double v : row) os << " " << fmt(v);
        os << "\n";
    }
    return os.str();
}

ModelBlock ModelBlock::from_text(const std::string& text) {
    std::istringstream in(text);
    expect(in, "model-block");
    expect(in, "v1");
    ModelBlock block;
    expect(in, "n");
    in >> block.n;
    expect(in, "dim");
    in >> block.dim;
    expect(in, "eps_target");
    in >> block.eps_target;
    expect(in, "eps_embed");
    in >> block.eps_embed;
    if (!in || block.n < 1 || block.dim < 1) throw std::runtime_error("malformed model-block text");
    for (int i = 0; i < block.n; ++i) {
        expect(in, "frame");
        std::vector<double> row(static_cast<std::size_t>(block.dim));
        for (auto& v : row) in >> v;
        if (!in) throw std::runtime_error("malformed model-block frame row");
        block.frame.push_back(std::move(row));
    }
    return block;
}

ModelBlock build_block(int n, double eps_embed, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("block dimension must be at least 1");
    if (!(eps_embed > 0.0) || !(eps_embed < 1.0))
        throw std::domain_error("embedding accuracy must lie in (0, 1)");

    const std::vector<std::vector<double>> pool = sphere_pool(n, seed);
    std::vector<std::vector<double>> net;
    std::vector<double> mindist(pool.size(), std::numeric_limits<double>::infinity());
    double radius = std::numeric_limits<double>::infinity();
    while (true) {
        std::size_t far = 0;
        for (std::size_t i = 1; i < pool.size(); ++i)
            if (mindist[i] > mindist[far]) far = i;
        if (!net.empty() && mindist[far] <= eps_embed) {
            radius = mindist[far];
            break;
        }
        if (static_cast<int>(net.size()) >= kNetCap)
            throw std::runtime_error(
                "net construction failure: covering at the requested accuracy needs more than " +
                std::to_string(kNetCap) + " directions");
        net.push_back(pool[far]);
        for (std::size_t i = 0; i < pool.size(); ++i)
            mindist[i] = std::min(mindist[i], angle_between(pool[i], net.back()));
    }

    ModelBlock block;
    block.n = n;
    block.dim = static_cast<int>(net.size());
    block.eps_target = eps_embed;
    block.eps_embed = 1.0 - std::cos(radius);
    block.frame.assign(static_cast<std::size_t>(n),
                       std::vector<double>(static_cast<std::size_t>(block.dim), 0.0));
    for (int j = 0; j < block.dim; ++j)
        for (int i = 0; i < n; ++i)
            block.frame[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                net[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];

    Eigen::MatrixXd U(block.dim, n);
    for (int j = 0; j < block.dim; ++j)
        for (int i = 0; i < n; ++i)
            U(j, i) = net[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(U);
    lu.setThreshold(1e-10);
    if (lu.rank() < n) throw std::runtime_error("net directions do not span the subspace");

    // sampled sandwich audit against the requested accuracy
    for (std::size_t s = 0; s < 256; ++s) {
        Rng rng(derive_seed(seed, 0x5a3d0000ull + s));
        std::vector<double> c = rng.gaussian_vector(n);
        const double c2 = std::sqrt(vec_dot(c, c));
        if (c2 < 1e-12) continue;
        const double v = block.embed_norm(c);
        if (v > c2 * (1.0 + 1e-9) || v < (1.0 - eps_embed) * c2 * (1.0 - 1e-9))
            throw std::runtime_error("embedding audit failed: sampled coefficient vector at ratio " +
                                     fmt(v / c2));
    }
    return block;
}

double dist_to_euclidean_ball(std::span<const double> x, const ModelBlock& block) {
    if (static_cast<int>(x.size()) != block.dim)
        throw std::invalid_argument("point does not live in the block's ambient");
    SpanMinimum m = min_norm_over_span(pnorm_handle(PNorm::Inf), x, block.frame, 1.0, {});
    return m.value;
}

TubeSet make_tube(ModelBlock block, double delta) {
    if (block.n < 1 || block.frame.empty()) throw std::invalid_argument("tube needs a built block");
    if (delta < 0.0) throw std::invalid_argument("tube width must be nonnegative");
    return {std::move(block), delta};
}

bool tube_membership(std::span<const double> x, const TubeSet& tube, double tol) {
    return dist_to_euclidean_ball(x, tube.block) <= tube.delta + tol;
}

double tube_gauge(std::span<const double> x, const TubeSet& tube, double tol) {
    double sup = 0.0;
    for (double v : x) sup = std::max(sup, std::abs(v));
    if (sup == 0.0) return 0.0;

    if (tube.delta == 0.0) {
        // exact width-0 case: gauge is the Euclidean coefficient norm on the
        // subspace and infinite off it
        double residual = 0.0;
        std::vector<double> c = least_squares_coefficients(tube.block, x, &residual);
        if (residual > 1e-9 * std::max(1.0, sup))
            return std::numeric_limits<double>::infinity();
        return std::sqrt(vec_dot(c, c));
    }

    const MinimizeConfig inner{1200, 3, 1, 1e-11};
    const NormHandle norm = pnorm_handle(PNorm::Inf);
    auto member_at = [&](double t) {
        std::vector<double> scaled(x.begin(), x.end());
        for (auto& v : scaled) v /= t;
        return min_norm_over_span(norm, scaled, tube.block.frame, 1.0, inner).value <= tube.delta;
    };

    double hi = std::max(sup / tube.delta, 1e-12);
    int grow = 0;
    while (!member_at(hi)) {  // descent slack can push the analytic bracket out
        hi *= 2.0;
        if (++grow > 60) return std::numeric_limits<double>::infinity();
    }
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > tol * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (member_at(mid) ? hi : lo) = mid;
    }
    return hi;
}

double quantitative_m(int n, double eps, int d) {
    if (n < 1) throw std::domain_error("index must be at least 1");
    if (!(eps > 0.0) || !(eps < 1.0)) throw std::domain_error("eps must lie in (0, 1)");
    if (d < 1) throw std::domain_error("decomposition constant must be at least 1");
    return std::sqrt(std::sqrt(static_cast<double>(n))) * (1.0 - eps) / (25.0 * d);
}

double lind_bound(int n) {
    if (n < 1) throw std::domain_error("index must be at least 1");
    return std::sqrt(std::sqrt(static_cast<double>(n))) / 3.0;
}

double transfer(double lip, int d, double eps) {
    if (lip < 0.0) throw std::domain_error("Lipschitz constant must be nonnegative");
    if (d < 1) throw std::domain_error("decomposition constant must be at least 1");
    if (!(eps > 0.0) || !(eps < 1.0)) throw std::domain_error("eps must lie in (0, 1)");
    return 2.0 * d * lip / (1.0 - eps);
}

std::vector<double> AssembledModel::block_slice(int n, std::span<const double> x) const {
    const int i = n - 1;
    if (i < 0 || i >= count()) throw std::out_of_range("block index out of range");
    auto view = space.block_view(i, x);
    return {view.begin(), view.end()};
}

double AssembledModel::hull_gauge(std::span<const double> x) const {
    double total = 0.0;
    for (int n = 1; n <= count(); ++n) {
        std::vector<double> part = block_slice(n, x);
        double sup = 0.0;
        for (double v : part) sup = std::max(sup, std::abs(v));
        if (sup == 0.0) continue;
        TubeSet tube{blocks[static_cast<std::size_t>(n - 1)], deltas[static_cast<std::size_t>(n - 1)]};
        total += tube_gauge(part, tube) / lambdas[static_cast<std::size_t>(n - 1)];
        if (std::isinf(total)) return total;
    }
    return total;
}

bool AssembledModel::member(std::span<const double> x, double tol) const {
    return hull_gauge(x) <= 1.0 + tol;
}

std::vector<double> AssembledModel::sample_hull(Rng& rng) const {
    std::vector<double> w(static_cast<std::size_t>(count()));
    rng.fill_simplex(w);
    std::vector<double> out(static_cast<std::size_t>(space.dim()), 0.0);
    for (int n = 1; n <= count(); ++n) {
        const ModelBlock& block = blocks[static_cast<std::size_t>(n - 1)];
        // exact tube draw: Euclidean-ball coefficients plus a sup-ball offset
        std::vector<double> c = rng.gaussian_vector(block.n);
        double norm = std::sqrt(vec_dot(c, c));
        const double radial = std::pow(rng.uniform01(), 1.0 / block.n);
        for (auto& v : c) v *= norm < 1e-12 ? 0.0 : radial / norm;
        const double scale = w[static_cast<std::size_t>(n - 1)] * lambdas[static_cast<std::size_t>(n - 1)];
        const int off = space.block_offset(n - 1);
        for (int j = 0; j < block.dim; ++j) {
            double v = 0.0;
            for (int i = 0; i < block.n; ++i)
                v += c[static_cast<std::size_t>(i)] *
                     block.frame[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            v += rng.uniform(-1.0, 1.0) * deltas[static_cast<std::size_t>(n - 1)];
            out[static_cast<std::size_t>(off + j)] = scale * v;
        }
    }
    return out;
}

namespace {

BlockSpace model_space(const std::vector<ModelBlock>& blocks) {
    std::vector<int> dims;
    std::vector<BlockNorm> norms;
    for (const auto& b : blocks) {
        dims.push_back(b.dim);
        norms.push_back(BlockNorm::p(PNorm::Inf));
    }
    return BlockSpace(std::move(dims), std::move(norms), PNorm::Inf);
}

}  // namespace

std::string AssembledModel::to_text() const {
    std::ostringstream os;
    os << "assembled-model v1\n";
    os << "count " << count() << "\n";
    os << "lambdas";
    for (double v : lambdas) os << " " << fmt(v);
    os << "\ndeltas";
    for (double v : deltas) os << " " << fmt(v);
    os << "\n";
    for (const auto& b : blocks) os << "block\n" << b.to_text();
    return os.str();
}

AssembledModel AssembledModel::from_text(const std::string& text) {
    std::istringstream in(text);
    expect(in, "assembled-model");
    expect(in, "v1");
    expect(in, "count");
    int count = 0;
    in >> count;
    if (!in || count < 1) throw std::runtime_error("malformed assembled-model text");
    std::vector<double> lambdas(static_cast<std::size_t>(count));
    std::vector<double> deltas(static_cast<std::size_t>(count));
    expect(in, "lambdas");
    for (auto& v : lambdas) in >> v;
    expect(in, "deltas");
    for (auto& v : deltas) in >> v;
    if (!in) throw std::runtime_error("malformed assembled-model ladders");
    expect(in, "block");
    std::vector<std::string> bodies;
    std::ostringstream body;
    std::string token;
    const char* sep = "";
    while (in >> token) {
        if (token == "block") {
            bodies.push_back(body.str());
            body.str("");
            sep = "";
        } else {
            body << sep << token;
            sep = " ";
        }
    }
    bodies.push_back(body.str());
    if (static_cast<int>(bodies.size()) != count)
        throw std::runtime_error("assembled-model text has the wrong number of blocks");
    std::vector<ModelBlock> blocks;
    for (const auto& b : bodies) blocks.push_back(ModelBlock::from_text(b));
    BlockSpace space = model_space(blocks);
    return {std::move(blocks), std::move(deltas), std::move(lambdas), std::move(space)};
}

AssembledModel assemble_model(int count, double eps_embed, std::vector<double> lambdas,
                              std::vector<double> deltas, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("model needs at least one block");
    std::vector<ModelBlock> blocks;
    for (int n = 1; n <= count; ++n)
        blocks.push_back(build_block(n, eps_embed, derive_seed(seed, static_cast<std::uint64_t>(n))));
    if (lambdas.empty()) lambdas = default_schedule(count).r;
    if (static_cast<int>(lambdas.size()) != count)
        throw std::invalid_argument("lambda ladder length must match the block count");
    if (deltas.empty()) {
        deltas.resize(static_cast<std::size_t>(count));
        for (int n = 1; n <= count; ++n)
            deltas[static_cast<std::size_t>(n - 1)] =
                lambdas[static_cast<std::size_t>(n - 1)] * std::pow(2.0, -n);
    }
    if (static_cast<int>(deltas.size()) != count)
        throw std::invalid_argument("delta ladder length must match the block count");
    for (int i = 0; i < count; ++i) {
        if (!(lambdas[static_cast<std::size_t>(i)] > 0.0))
            throw std::invalid_argument("lambda ladder must be positive");
        if (i > 0 && lambdas[static_cast<std::size_t>(i)] >
                         lambdas[static_cast<std::size_t>(i - 1)] * (1.0 + 1e-12))
            throw std::invalid_argument("lambda ladder must be nonincreasing");
        if (deltas[static_cast<std::size_t>(i)] < 0.0)
            throw std::invalid_argument("delta ladder must be nonnegative");
    }
    BlockSpace space = model_space(blocks);
    return {std::move(blocks), std::move(deltas), std::move(lambdas), std::move(space)};
}

std::string AuditReport::to_text() const {
    std::ostringstream os;
    os << "retraction-audit v1\n";
    os << "fdd_constant " << fmt(fdd_constant) << "\n";
    os << "epsilon " << fmt(epsilon) << "\n";
    os << "fix_samples " << fix_samples << "\n";
    os << "max_fix_residual " << fmt(max_fix_residual) << "\n";
    os << "range_samples " << range_samples << "\n";
    os << "max_range_gauge " << fmt(max_range_gauge) << "\n";
    os << "pairs_per_block " << pairs_per_block << "\n";
    os << "workers " << workers << "\n";
    os << "columns n dim lambda delta lip_estimate m_bound ratio evidence\n";
    for (const auto& r : rows)
        os << r.n << " " << r.dim << " " << fmt(r.lambda) << " " << fmt(r.delta) << " "
           << fmt(r.lip_estimate) << " " << fmt(r.m_bound) << " " << fmt(r.ratio) << " "
           << (r.evidence ? 1 : 0) << "\n";
    if (!note.empty()) os << "note " << note << "\n";
    return os.str();
}

std::string AuditReport::csv() const {
    std::ostringstream os;
    os << "n,dim,lambda,delta,lip_estimate,m_bound,ratio,evidence\n";
    for (const auto& r : rows)
        os << r.n << "," << r.dim << "," << fmt(r.lambda) << "," << fmt(r.delta) << ","
           << fmt(r.lip_estimate) << "," << fmt(r.m_bound) << "," << fmt(r.ratio) << ","
           << (r.evidence ? 1 : 0) << "\n";
    return os.str();
}

AuditReport retraction_audit(const AssembledModel& model, const VecMap& candidate,
                             double fdd_constant, double epsilon, const AuditConfig& cfg) {
    if (fdd_constant < 1.0) throw std::invalid_argument("decomposition constant must be at least 1");
    if (!(epsilon > 0.0) || !(epsilon < 1.0)) throw std::domain_error("eps must lie in (0, 1)");
    if (cfg.fix_samples == 0 || cfg.pairs_per_block == 0)
        throw std::invalid_argument("audit budgets must be positive");
    if (cfg.workers < 1) throw std::invalid_argument("worker count must be positive");

    AuditReport report;
    report.fdd_constant = fdd_constant;
    report.epsilon = epsilon;
    report.fix_samples = cfg.fix_samples;
    report.range_samples = cfg.range_samples;
    report.pairs_per_block = cfg.pairs_per_block;
    report.workers = cfg.workers;

    auto witness = [](const char* what, std::size_t s, double value,
                      const std::vector<double>& x) {
        std::ostringstream os;
        os << what << " at sample " << s << ": " << fmt(value) << " at point (";
        for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << fmt(x[i]);
        os << ")";
        return std::invalid_argument(os.str());
    };

    for (std::size_t s = 0; s < cfg.fix_samples; ++s) {
        Rng rng(derive_seed(cfg.seed, 0xF1c50000ull + s));
        std::vector<double> x = model.sample_hull(rng);
        std::vector<double> y = candidate(x);
        const double residual = model.space.distance(x, y);
        report.max_fix_residual = std::max(report.max_fix_residual, residual);
        if (residual > cfg.fix_tolerance)
            throw witness("candidate fails the fixes-hull audit with residual", s, residual, x);
    }
    for (std::size_t s = 0; s < cfg.range_samples; ++s) {
        Rng rng(derive_seed(cfg.seed, 0x9a43e0000ull + s));
        std::vector<double> z = model.space.sample_box(rng, 1.0);
        const double gauge = model.hull_gauge(candidate(z));
        report.max_range_gauge = std::max(report.max_range_gauge, gauge);
        if (gauge > 1.0 + cfg.range_tolerance)
            throw witness("candidate leaves the hull with gauge", s, gauge, z);
    }

    report.rows.assign(static_cast<std::size_t>(model.count()), {});
    auto run = [&](int begin, int stride) {
        for (int idx = begin; idx < model.count(); idx += stride) {
            const int n = idx + 1;
            const ModelBlock& block = model.blocks[static_cast<std::size_t>(idx)];
            const double lambda = model.lambdas[static_cast<std::size_t>(idx)];

            VecMap factor = [&model, &candidate, n, lambda](const std::vector<double>& x) {
                std::vector<double> scaled = vec_scale(x, lambda);
                std::vector<double> out = model.block_slice(n, candidate(scaled));
                for (auto& v : out) v /= lambda;
                return out;
            };
            PairSampler sampler;
            sampler.draw = [&model](Rng& rng) { return model.space.sample_box(rng, 1.0); };
            NormFn dist_in = [&model](std::span<const double> v) { return model.space.ambient_norm(v); };
            NormFn dist_out = [](std::span<const double> v) {
                double sup = 0.0;
                for (double c : v) sup = std::max(sup, std::abs(c));
                return sup;
            };
            LipschitzReport lip =
                estimate_lipschitz(factor, sampler, cfg.pairs_per_block,
                                   derive_seed(cfg.seed, 0xAAA0000ull + static_cast<std::uint64_t>(n)),
                                   dist_in, dist_out, 1);

            AuditRow row;
            row.n = n;
            row.dim = block.dim;
            row.lambda = lambda;
            row.delta = model.deltas[static_cast<std::size_t>(idx)];
            row.lip_estimate = lip.estimate;
            row.m_bound = quantitative_m(block.n, epsilon, 1);
            row.ratio = row.lip_estimate / row.m_bound;
            row.evidence = row.lip_estimate >= row.m_bound / (2.0 * fdd_constant);
            report.rows[static_cast<std::size_t>(idx)] = row;
        }
    };

    if (cfg.workers == 1 || model.count() == 1) {
        run(0, 1);
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr first_error;
        std::mutex gate;
        const int spawn = std::min(cfg.workers, model.count());
        for (int w = 0; w < spawn; ++w)
            pool.emplace_back([&, w]() {
                try {
                    run(w, spawn);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(gate);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    report.note =
        "sup-sum decomposition constant 1 used in the bounds; sampled constants document "
        "where a candidate blows up and cannot certify that no retraction exists";
    return report;
}

}  // namespace retractlab
