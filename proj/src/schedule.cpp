#include "retractlab/schedule.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "retractlab/block_space.hpp"

namespace retractlab {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("schedule invariant violated: ") + what);
}

std::vector<double> default_A(int depth) {
    std::vector<double> A(static_cast<std::size_t>(depth));
    for (int m = 1; m <= depth; ++m) A[m - 1] = default_block_sum_constant(m);
    return A;
}

}  // namespace

void RadiiSchedule::validate() const {
    const int n = depth();
    require(n >= 1, "empty radii ladder");
    require(static_cast<int>(A.size()) == n, "A has wrong length");
    for (int i = 0; i < n; ++i) {
        require(r[static_cast<std::size_t>(i)] > 0.0, "radii must be positive");
        require(A[static_cast<std::size_t>(i)] > 0.0, "A must be positive");
        if (i > 0)
            require(r[static_cast<std::size_t>(i)] <= r[static_cast<std::size_t>(i - 1)] * (1.0 + 1e-12),
                    "radii must be nonincreasing");
    }
    if (!q.empty()) {
        require(static_cast<int>(q.size()) == n, "q has wrong length");
        for (int i = 1; i < n; ++i)
            require(r[static_cast<std::size_t>(i)] <=
                        q[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(i - 1)] * (1.0 + 1e-12),
                    "r_n exceeds q_n r_{n-1}");
    }
    if (has_budgets()) {
        require(static_cast<int>(delta.size()) == n, "delta has wrong length");
        require(static_cast<int>(a.size()) == n, "a has wrong length");
        require(static_cast<int>(alpha.size()) == n, "alpha has wrong length");
        double prod = 1.0;
        for (int i = 0; i < n; ++i) {
            require(delta[static_cast<std::size_t>(i)] > 0.0, "delta must be positive");
            prod *= 1.0 + delta[static_cast<std::size_t>(i)];
        }
        if (target_delta > 0.0)
            require(prod <= 1.0 + target_delta + 1e-12, "stage budgets exceed the total budget");
        for (int i = 0; i < n; ++i) {
            // alpha must dominate the truncated tail sum and stay within delta/2
            double tail = 0.0;
            for (int k = i + 1; k < n; ++k)
                tail += a[static_cast<std::size_t>(k)] * A[static_cast<std::size_t>(k)];
            require(alpha[static_cast<std::size_t>(i)] >= tail - 1e-15, "alpha below its tail sum");
            require(alpha[static_cast<std::size_t>(i)] <=
                        delta[static_cast<std::size_t>(i)] / 2.0 + 1e-15,
                    "alpha exceeds delta/2");
        }
    }
}

RadiiSchedule default_schedule(int depth) {
    if (depth < 1) throw std::invalid_argument("schedule depth must be >= 1");
    RadiiSchedule s;
    s.A = default_A(depth);
    s.r.resize(static_cast<std::size_t>(depth));
    s.q.resize(static_cast<std::size_t>(depth));
    s.delta.resize(static_cast<std::size_t>(depth));
    s.a.resize(static_cast<std::size_t>(depth));
    s.alpha.resize(static_cast<std::size_t>(depth));
    double prod = 1.0;
    for (int n = 1; n <= depth; ++n) {
        const auto i = static_cast<std::size_t>(n - 1);
        s.q[i] = 1.0 / (n * std::pow(2.0, n + 1));
        s.delta[i] = std::pow(2.0, -n + 1);
        s.a[i] = 1.0 / (n * std::pow(2.0, n + 1));
        s.alpha[i] = std::pow(2.0, -n);  // analytic tail: sum_{k>n} 2^{-k}
        s.r[i] = (n == 1) ? 1.0 : s.r[i - 1] * s.q[i];
        prod *= 1.0 + s.delta[i];
    }
    s.target_delta = prod - 1.0;
    s.validate();
    return s;
}

RadiiSchedule schedule_for_delta(double delta, int depth, std::vector<double> A) {
    if (depth < 1) throw std::invalid_argument("schedule depth must be >= 1");
    if (delta <= 0.0) throw std::invalid_argument("delta must be positive");
    RadiiSchedule s;
    s.A = A.empty() ? default_A(depth) : std::move(A);
    if (static_cast<int>(s.A.size()) != depth)
        throw std::invalid_argument("A must have one entry per depth");
    s.target_delta = delta;
    s.r.resize(static_cast<std::size_t>(depth));
    s.q.resize(static_cast<std::size_t>(depth));
    s.delta.resize(static_cast<std::size_t>(depth));
    s.a.resize(static_cast<std::size_t>(depth));
    s.alpha.assign(static_cast<std::size_t>(depth), 0.0);

    const double c = std::log1p(delta);  // prod (1 + c 2^{-n}) <= e^c = 1 + delta
    for (int n = 1; n <= depth; ++n) {
        const auto i = static_cast<std::size_t>(n - 1);
        s.delta[i] = c * std::pow(2.0, -n);
        s.a[i] = s.delta[i] / (4.0 * s.A[i]);  // a_k A_k = delta_k/4, geometric tail
    }
    for (int n = depth - 1; n >= 1; --n) {
        const auto i = static_cast<std::size_t>(n - 1);
        s.alpha[i] = s.alpha[i + 1] + s.a[i + 1] * s.A[i + 1];
    }
    for (int n = 1; n <= depth; ++n) {
        const auto i = static_cast<std::size_t>(n - 1);
        if (n == 1) {
            s.q[i] = s.a[i];
            s.r[i] = 1.0;
        } else {
            s.q[i] = std::min(s.a[i], s.delta[i] / (2.0 * s.A[i - 1]));
            s.r[i] = s.r[i - 1] * s.q[i];
        }
    }
    s.validate();
    return s;
}

RadiiSchedule geometric_schedule(double ratio, int depth) {
    if (depth < 1) throw std::invalid_argument("schedule depth must be >= 1");
    if (ratio <= 0.0 || ratio > 1.0) throw std::invalid_argument("ratio must lie in (0,1]");
    RadiiSchedule s;
    s.A = default_A(depth);
    s.r.resize(static_cast<std::size_t>(depth));
    s.q.assign(static_cast<std::size_t>(depth), ratio);
    for (int n = 1; n <= depth; ++n)
        s.r[static_cast<std::size_t>(n - 1)] = (n == 1) ? 1.0 : s.r[static_cast<std::size_t>(n - 2)] * ratio;
    s.validate();
    return s;
}

RadiiSchedule schedule_from_radii(std::vector<double> r) {
    RadiiSchedule s;
    s.A = default_A(static_cast<int>(r.size()));
    s.r = std::move(r);
    s.validate();
    return s;
}

namespace {

void append_row(std::ostringstream& os, const char* key, const std::vector<double>& v) {
    if (v.empty()) return;
    os << key << ":";
    char buf[64];
    for (double x : v) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        os << ' ' << buf;
    }
    os << "\n";
}

}  // namespace

std::string RadiiSchedule::to_text() const {
    std::ostringstream os;
    os << "schedule v1\n";
    os << "depth: " << depth() << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", target_delta);
    os << "target_delta: " << buf << "\n";
    append_row(os, "r", r);
    append_row(os, "q", q);
    append_row(os, "A", A);
    append_row(os, "delta", delta);
    append_row(os, "a", a);
    append_row(os, "alpha", alpha);
    return os.str();
}

RadiiSchedule RadiiSchedule::from_text(const std::string& text) {
    std::istringstream is(text);
    std::string header;
    std::getline(is, header);
    if (header != "schedule v1") throw std::invalid_argument("bad schedule header: " + header);
    RadiiSchedule s;
    int depth = -1;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto colon = line.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("bad schedule line: " + line);
        std::string key = line.substr(0, colon);
        std::istringstream rest(line.substr(colon + 1));
        if (key == "depth") {
            rest >> depth;
        } else if (key == "target_delta") {
            rest >> s.target_delta;
        } else {
            std::vector<double> v;
            double x;
            while (rest >> x) v.push_back(x);
            if (key == "r") s.r = std::move(v);
            else if (key == "q") s.q = std::move(v);
            else if (key == "A") s.A = std::move(v);
            else if (key == "delta") s.delta = std::move(v);
            else if (key == "a") s.a = std::move(v);
            else if (key == "alpha") s.alpha = std::move(v);
            else throw std::invalid_argument("unknown schedule key: " + key);
        }
    }
    if (depth != s.depth()) throw std::invalid_argument("schedule depth disagrees with radii length");
    s.validate();
    return s;
}

}  // namespace retractlab
