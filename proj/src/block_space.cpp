#include "retractlab/block_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace retractlab {

std::string pnorm_name(PNorm p) {
    switch (p) {
        case PNorm::One: return "p1";
        case PNorm::Two: return "p2";
        case PNorm::Inf: return "pinf";
    }
    return "p2";
}

PNorm pnorm_from_name(const std::string& name) {
    if (name == "p1") return PNorm::One;
    if (name == "p2") return PNorm::Two;
    if (name == "pinf") return PNorm::Inf;
    throw std::invalid_argument("unknown norm tag '" + name + "' (expected p1, p2 or pinf)");
}

BlockNorm BlockNorm::p(PNorm kind) {
    BlockNorm n;
    n.is_table_ = false;
    n.p_ = kind;
    return n;
}

BlockNorm BlockNorm::table(FunctionalTable t) {
    if (t.rows.empty()) throw std::invalid_argument("functional table must have at least one row");
    const std::size_t d = t.rows.front().size();
    for (const auto& r : t.rows)
        if (r.size() != d) throw std::invalid_argument("functional table rows must share one dimension");
    BlockNorm n;
    n.is_table_ = true;
    n.table_ = std::move(t);
    return n;
}

double BlockNorm::eval(std::span<const double> x) const {
    if (is_table_) {
        double best = 0.0;
        for (const auto& row : table_.rows) {
            double v = std::abs(vec_dot(row, x));
            best = std::max(best, v);
        }
        return best;
    }
    switch (p_) {
        case PNorm::One: {
            double s = 0.0;
            for (double v : x) s += std::abs(v);
            return s;
        }
        case PNorm::Two: {
            double s = 0.0;
            for (double v : x) s += v * v;
            return std::sqrt(s);
        }
        case PNorm::Inf: {
            double m = 0.0;
            for (double v : x) m = std::max(m, std::abs(v));
            return m;
        }
    }
    return 0.0;
}

double BlockNorm::dual(std::span<const double> g) const {
    if (is_table_) throw std::logic_error("dual norm of a functional-table block is not available");
    switch (p_) {
        case PNorm::One: return BlockNorm::p(PNorm::Inf).eval(g);
        case PNorm::Two: return BlockNorm::p(PNorm::Two).eval(g);
        case PNorm::Inf: return BlockNorm::p(PNorm::One).eval(g);
    }
    return 0.0;
}

std::vector<double> BlockNorm::norming_point(std::span<const double> g) const {
    if (is_table_) throw std::logic_error("norming point of a functional-table block is not available");
    std::vector<double> v(g.size(), 0.0);
    switch (p_) {
        case PNorm::One: {
            // dual is sup norm: one vertex of the cross-polytope
            std::size_t j = 0;
            double best = -1.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (std::abs(g[i]) > best) {
                    best = std::abs(g[i]);
                    j = i;
                }
            }
            if (!g.empty()) v[j] = g[j] >= 0.0 ? 1.0 : -1.0;
            break;
        }
        case PNorm::Two: {
            double n = BlockNorm::p(PNorm::Two).eval(g);
            if (n == 0.0) {
                if (!v.empty()) v[0] = 1.0;
            } else {
                for (std::size_t i = 0; i < g.size(); ++i) v[i] = g[i] / n;
            }
            break;
        }
        case PNorm::Inf: {
            for (std::size_t i = 0; i < g.size(); ++i) v[i] = g[i] >= 0.0 ? 1.0 : -1.0;
            break;
        }
    }
    return v;
}

std::vector<double> BlockNorm::subgradient(std::span<const double> x) const {
    std::vector<double> g(x.size(), 0.0);
    if (is_table_) {
        double best = -1.0;
        std::size_t arg = 0;
        double sgn = 1.0;
        for (std::size_t j = 0; j < table_.rows.size(); ++j) {
            double v = vec_dot(table_.rows[j], x);
            if (std::abs(v) > best) {
                best = std::abs(v);
                arg = j;
                sgn = v >= 0.0 ? 1.0 : -1.0;
            }
        }
        if (best > 0.0)
            for (std::size_t i = 0; i < x.size(); ++i) g[i] = sgn * table_.rows[arg][i];
        return g;
    }
    switch (p_) {
        case PNorm::One:
            for (std::size_t i = 0; i < x.size(); ++i)
                g[i] = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
            break;
        case PNorm::Two: {
            double n = eval(x);
            if (n > 0.0)
                for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] / n;
            break;
        }
        case PNorm::Inf: {
            double m = eval(x);
            if (m > 0.0) {
                for (std::size_t i = 0; i < x.size(); ++i) {
                    if (std::abs(x[i]) == m) {
                        g[i] = x[i] >= 0.0 ? 1.0 : -1.0;
                        break;  // any maximizing coordinate is a valid selection
                    }
                }
            }
            break;
        }
    }
    return g;
}

BlockSpace::BlockSpace(std::vector<int> dims, std::vector<BlockNorm> norms, PNorm ambient_rule,
                       bool monotone)
    : dims_(std::move(dims)), norms_(std::move(norms)), ambient_(ambient_rule), monotone_(monotone) {
    if (dims_.empty()) throw std::invalid_argument("a block space needs at least one block");
    if (dims_.size() != norms_.size())
        throw std::invalid_argument("dims and block norms must have equal length");
    offsets_.resize(dims_.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (dims_[i] <= 0) throw std::invalid_argument("block dimensions must be positive");
        offsets_[i] = dim_;
        dim_ += dims_[i];
    }
}

BlockSpace BlockSpace::ones(int blocks, PNorm block_kind, PNorm ambient_rule) {
    return uniform(blocks, 1, block_kind, ambient_rule);
}

BlockSpace BlockSpace::uniform(int blocks, int dim_each, PNorm block_kind, PNorm ambient_rule) {
    std::vector<int> dims(static_cast<std::size_t>(blocks), dim_each);
    std::vector<BlockNorm> norms(static_cast<std::size_t>(blocks), BlockNorm::p(block_kind));
    return BlockSpace(std::move(dims), std::move(norms), ambient_rule);
}

std::span<const double> BlockSpace::block_view(int i, std::span<const double> x) const {
    return x.subspan(static_cast<std::size_t>(offsets_[i]), static_cast<std::size_t>(dims_[i]));
}

double BlockSpace::block_norm(int i, std::span<const double> x) const {
    return norms_[i].eval(block_view(i, x));
}

double BlockSpace::ambient_norm(std::span<const double> x) const {
    switch (ambient_) {
        case PNorm::One: {
            double s = 0.0;
            for (int i = 0; i < block_count(); ++i) s += block_norm(i, x);
            return s;
        }
        case PNorm::Two: {
            double s = 0.0;
            for (int i = 0; i < block_count(); ++i) {
                double b = block_norm(i, x);
                s += b * b;
            }
            return std::sqrt(s);
        }
        case PNorm::Inf: {
            double m = 0.0;
            for (int i = 0; i < block_count(); ++i) m = std::max(m, block_norm(i, x));
            return m;
        }
    }
    return 0.0;
}

double BlockSpace::distance(std::span<const double> x, std::span<const double> y) const {
    return ambient_norm(vec_sub(x, y));
}

double BlockSpace::ambient_dual_norm(std::span<const double> g) const {
    // dual of a p-sum of block norms is the conjugate-sum of block duals
    switch (ambient_) {
        case PNorm::One: {
            double m = 0.0;
            for (int i = 0; i < block_count(); ++i) m = std::max(m, norms_[i].dual(block_view(i, g)));
            return m;
        }
        case PNorm::Two: {
            double s = 0.0;
            for (int i = 0; i < block_count(); ++i) {
                double b = norms_[i].dual(block_view(i, g));
                s += b * b;
            }
            return std::sqrt(s);
        }
        case PNorm::Inf: {
            double s = 0.0;
            for (int i = 0; i < block_count(); ++i) s += norms_[i].dual(block_view(i, g));
            return s;
        }
    }
    return 0.0;
}

std::vector<double> BlockSpace::ambient_subgradient(std::span<const double> x) const {
    std::vector<double> g(x.size(), 0.0);
    switch (ambient_) {
        case PNorm::One: {
            for (int i = 0; i < block_count(); ++i) {
                auto sub = norms_[i].subgradient(block_view(i, x));
                for (int k = 0; k < dims_[i]; ++k) g[offsets_[i] + k] = sub[k];
            }
            break;
        }
        case PNorm::Two: {
            double total = ambient_norm(x);
            if (total == 0.0) break;
            for (int i = 0; i < block_count(); ++i) {
                double b = block_norm(i, x);
                if (b == 0.0) continue;
                auto sub = norms_[i].subgradient(block_view(i, x));
                for (int k = 0; k < dims_[i]; ++k) g[offsets_[i] + k] = (b / total) * sub[k];
            }
            break;
        }
        case PNorm::Inf: {
            int arg = 0;
            double best = -1.0;
            for (int i = 0; i < block_count(); ++i) {
                double b = block_norm(i, x);
                if (b > best) {
                    best = b;
                    arg = i;
                }
            }
            if (best > 0.0) {
                auto sub = norms_[arg].subgradient(block_view(arg, x));
                for (int k = 0; k < dims_[arg]; ++k) g[offsets_[arg] + k] = sub[k];
            }
            break;
        }
    }
    return g;
}

std::vector<double> BlockSpace::truncate(std::span<const double> x, int n) const {
    if (n < 0 || n > block_count()) throw std::out_of_range("truncation index out of range");
    std::vector<double> out(x.begin(), x.end());
    truncate_inplace(out, n);
    return out;
}

void BlockSpace::truncate_inplace(std::vector<double>& x, int n) const {
    if (n < 0 || n > block_count()) throw std::out_of_range("truncation index out of range");
    const int keep = (n == block_count()) ? dim_ : offsets_[n];
    std::fill(x.begin() + keep, x.end(), 0.0);
}

std::vector<double> BlockSpace::block_component(std::span<const double> x, int i) const {
    std::vector<double> out(static_cast<std::size_t>(dim_), 0.0);
    for (int k = 0; k < dims_[i]; ++k) out[offsets_[i] + k] = x[offsets_[i] + k];
    return out;
}

std::vector<std::vector<double>> BlockSpace::block_components(std::span<const double> x) const {
    std::vector<std::vector<double>> out;
    out.reserve(dims_.size());
    for (int i = 0; i < block_count(); ++i) out.push_back(block_component(x, i));
    return out;
}

double BlockSpace::block_norm_sum(std::span<const double> x, int m) const {
    if (m < 0 || m > block_count()) throw std::out_of_range("block index out of range");
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += block_norm(i, x);
    return s;
}

std::vector<double> BlockSpace::sample_box(Rng& rng, double halfwidth) const {
    std::vector<double> x(static_cast<std::size_t>(dim_));
    for (auto& v : x) v = rng.uniform(-halfwidth, halfwidth);
    return x;
}

namespace {

void fill_ball(Rng& rng, PNorm kind, std::span<double> out, double radius) {
    const std::size_t d = out.size();
    switch (kind) {
        case PNorm::Inf:
            for (auto& v : out) v = rng.uniform(-radius, radius);
            break;
        case PNorm::Two: {
            double s = 0.0;
            for (auto& v : out) {
                v = rng.normal();
                s += v * v;
            }
            s = std::sqrt(s);
            double r = radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(d));
            for (auto& v : out) v = (s > 0.0) ? v / s * r : 0.0;
            break;
        }
        case PNorm::One: {
            std::vector<double> w(d);
            rng.fill_simplex(w);
            double r = radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(d));
            for (std::size_t i = 0; i < d; ++i) out[i] = rng.sign() * w[i] * r;
            break;
        }
    }
}

void fill_sphere(Rng& rng, PNorm kind, std::span<double> out, double radius) {
    const std::size_t d = out.size();
    switch (kind) {
        case PNorm::Two: {
            double s = 0.0;
            for (auto& v : out) {
                v = rng.normal();
                s += v * v;
            }
            s = std::sqrt(s);
            if (s == 0.0) {
                out[0] = radius;
                break;
            }
            for (auto& v : out) v = v / s * radius;
            break;
        }
        case PNorm::One: {
            std::vector<double> w(d);
            rng.fill_simplex(w);
            for (std::size_t i = 0; i < d; ++i) out[i] = rng.sign() * w[i] * radius;
            break;
        }
        case PNorm::Inf: {
            for (auto& v : out) v = rng.uniform(-radius, radius);
            std::size_t pin = d == 0 ? 0 : rng.next() % d;
            out[pin] = rng.sign() * radius;
            break;
        }
    }
}

}  // namespace

std::vector<double> BlockSpace::sample_block_ball(Rng& rng, int i, double radius) const {
    std::vector<double> x(static_cast<std::size_t>(dim_), 0.0);
    std::span<double> view(x.data() + offsets_[i], static_cast<std::size_t>(dims_[i]));
    if (norms_[i].is_p()) {
        fill_ball(rng, norms_[i].pkind(), view, radius);
        return x;
    }
    // table norm: sphere point scaled by u^{1/d}, the radial law of the
    // uniform distribution on any star-shaped body
    x = sample_block_sphere(rng, i, radius);
    const double u = std::pow(rng.uniform01(), 1.0 / static_cast<double>(dims_[i]));
    std::span<double> filled(x.data() + offsets_[i], static_cast<std::size_t>(dims_[i]));
    for (auto& v : filled) v *= u;
    return x;
}

std::vector<double> BlockSpace::sample_block_sphere(Rng& rng, int i, double radius) const {
    std::vector<double> x(static_cast<std::size_t>(dim_), 0.0);
    std::span<double> view(x.data() + offsets_[i], static_cast<std::size_t>(dims_[i]));
    if (norms_[i].is_p()) {
        fill_sphere(rng, norms_[i].pkind(), view, radius);
        return x;
    }
    // table norm: gaussian direction projected radially, as for the ambient sphere
    double n = 0.0;
    do {
        for (auto& v : view) v = rng.normal();
        n = norms_[i].eval(view);
    } while (n == 0.0);
    for (auto& v : view) v = v / n * radius;
    return x;
}

std::vector<double> BlockSpace::sample_ambient_sphere(Rng& rng) const {
    // gaussian direction normalized in the ambient norm; full support on the sphere
    std::vector<double> x = rng.gaussian_vector(static_cast<std::size_t>(dim_));
    double n = ambient_norm(x);
    while (n == 0.0) {
        x = rng.gaussian_vector(static_cast<std::size_t>(dim_));
        n = ambient_norm(x);
    }
    for (auto& v : x) v /= n;
    return x;
}

std::vector<double> BlockSpace::sample_ambient_ball(Rng& rng, double radius) const {
    std::vector<double> x = sample_ambient_sphere(rng);
    double r = radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(dim_));
    for (auto& v : x) v *= r;
    return x;
}

std::string BlockSpace::to_text() const {
    std::ostringstream os;
    os << "blockspace v1\n";
    os << "blocks: " << block_count() << "\n";
    os << "dims:";
    for (int d : dims_) os << ' ' << d;
    os << "\nblock_norm:";
    for (const auto& n : norms_) {
        if (!n.is_p()) throw std::logic_error("functional-table blocks have no text form");
        os << ' ' << pnorm_name(n.pkind());
    }
    os << "\nambient_rule: " << pnorm_name(ambient_) << "\n";
    os << "monotone: " << (monotone_ ? 1 : 0) << "\n";
    return os.str();
}

BlockSpace BlockSpace::from_text(const std::string& text) {
    std::istringstream is(text);
    std::string header;
    std::getline(is, header);
    if (header != "blockspace v1") throw std::invalid_argument("bad blockspace header: " + header);
    int blocks = -1;
    std::vector<int> dims;
    std::vector<BlockNorm> norms;
    PNorm ambient = PNorm::Two;
    bool monotone = true;
    bool saw_ambient = false;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto colon = line.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("bad blockspace line: " + line);
        std::string key = line.substr(0, colon);
        std::istringstream rest(line.substr(colon + 1));
        if (key == "blocks") {
            rest >> blocks;
        } else if (key == "dims") {
            int d;
            while (rest >> d) dims.push_back(d);
        } else if (key == "block_norm") {
            std::string tag;
            while (rest >> tag) norms.push_back(BlockNorm::p(pnorm_from_name(tag)));
        } else if (key == "ambient_rule") {
            std::string tag;
            rest >> tag;
            ambient = pnorm_from_name(tag);
            saw_ambient = true;
        } else if (key == "monotone") {
            int m;
            rest >> m;
            monotone = m != 0;
        } else {
            throw std::invalid_argument("unknown blockspace key: " + key);
        }
    }
    if (blocks < 1 || dims.empty() || norms.empty() || !saw_ambient)
        throw std::invalid_argument("incomplete blockspace description");
    if (static_cast<int>(dims.size()) != blocks || static_cast<int>(norms.size()) != blocks)
        throw std::invalid_argument("blockspace field lengths disagree with block count");
    return BlockSpace(std::move(dims), std::move(norms), ambient, monotone);
}

bool BlockSpace::same_layout(const BlockSpace& other) const {
    if (dims_ != other.dims_ || ambient_ != other.ambient_ || monotone_ != other.monotone_)
        return false;
    for (std::size_t i = 0; i < norms_.size(); ++i) {
        if (norms_[i].is_p() != other.norms_[i].is_p()) return false;
        if (norms_[i].is_p() && norms_[i].pkind() != other.norms_[i].pkind()) return false;
    }
    return true;
}

std::vector<Point> Point::components() const {
    std::vector<Point> out;
    for (auto& c : space->block_components(coeffs)) out.push_back({std::move(c), space});
    return out;
}

std::string points_to_csv(const std::vector<Point>& pts) {
    std::ostringstream os;
    if (pts.empty()) return "";
    const int d = pts.front().space->dim();
    for (int k = 0; k < d; ++k) os << (k ? "," : "") << "x" << k;
    os << "\n";
    char buf[64];
    for (const auto& p : pts) {
        for (int k = 0; k < d; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", p.coeffs[static_cast<std::size_t>(k)]);
            os << (k ? "," : "") << buf;
        }
        os << "\n";
    }
    return os.str();
}

std::vector<Point> points_from_csv(const std::string& csv, const BlockSpace& space) {
    std::vector<Point> out;
    std::istringstream is(csv);
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (first) {  // header
            first = false;
            continue;
        }
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        if (static_cast<int>(row.size()) != space.dim())
            throw std::invalid_argument("point row has wrong dimension");
        out.push_back({std::move(row), &space});
    }
    return out;
}

std::vector<double> radial_projection(std::span<const double> x, double rho,
                                      const std::function<double(std::span<const double>)>& norm) {
    if (rho <= 0.0) throw std::invalid_argument("radial projection needs a positive radius");
    double n = norm(x);
    std::vector<double> out(x.begin(), x.end());
    if (n <= rho) return out;
    double t = rho / n;
    for (auto& v : out) v *= t;
    return out;
}

std::vector<double> radial_projection(const BlockSpace& space, std::span<const double> x, double rho) {
    return radial_projection(x, rho, [&](std::span<const double> v) { return space.ambient_norm(v); });
}

std::vector<double> vec_add(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

std::vector<double> vec_sub(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

std::vector<double> vec_scale(std::span<const double> a, double t) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * t;
    return out;
}

void vec_axpy(std::vector<double>& y, double t, std::span<const double> x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += t * x[i];
}

double vec_dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace retractlab
