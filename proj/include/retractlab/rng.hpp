#pragma once

#include <bit>
#include <cstdint>
#include <cmath>
#include <span>
#include <vector>

namespace retractlab {

// splitmix64; used to expand seeds and derive per-index streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Independent stream seed for (seed, stream). Streams derived this way can be
// evaluated in any order or split across workers without changing results.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0xd1b54a32d192ed03ull * (stream + 1));
    splitmix64(s);
    return splitmix64(s);
}

// FNV-1a over raw double bits; used to pin Monte-Carlo streams to a point.
inline std::uint64_t hash_doubles(std::span<const double> xs, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ull ^ seed;
    for (double v : xs) {
        std::uint64_t b = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) {
            h ^= (b >> (8 * i)) & 0xffull;
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

// xoshiro256** with splitmix-seeded state. Self-contained so that identical
// seeds give identical streams on every platform (std distributions do not
// guarantee that).
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next() {
        auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0,1)
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    double sign() { return (next() & 1ull) ? 1.0 : -1.0; }

    // Box-Muller with a cached spare.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01(), u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double exponential() {
        double u = uniform01();
        while (u <= 0.0) u = uniform01();
        return -std::log(u);
    }

    std::vector<double> gaussian_vector(std::size_t d) {
        std::vector<double> v(d);
        for (auto& x : v) x = normal();
        return v;
    }

    // Uniform point of the simplex {w >= 0, sum w = 1} (exponential spacings).
    void fill_simplex(std::span<double> w) {
        double s = 0.0;
        for (auto& x : w) {
            x = exponential();
            s += x;
        }
        for (auto& x : w) x /= s;
    }

private:
    std::uint64_t s_[4]{};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace retractlab
