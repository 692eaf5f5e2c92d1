#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "stylegest/core/array.hpp"

namespace stylegest {

// splitmix64; used to derive independent substream seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, const std::string& tag) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : tag) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return mix_seed(a, h);
}

// Deterministic random stream (xoshiro256** core, own normal transform so the
// byte-for-byte sequence does not depend on the standard library).
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) {
        std::uint64_t z = seed;
        for (auto& w : s_) {
            z += 0x9e3779b97f4a7c15ULL;
            std::uint64_t x = z;
            x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
            x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
            w = x ^ (x >> 31);
        }
    }

    std::uint64_t next_u64() {
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

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    idx uniform_index(idx n) { return static_cast<idx>(next_u64() % static_cast<std::uint64_t>(n)); }

    // uniform integer in [lo, hi] inclusive
    idx uniform_int(idx lo, idx hi) { return lo + uniform_index(hi - lo + 1); }

    // standard normal via Box-Muller (cached pair)
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    Array normal_array(std::vector<idx> shape, double stddev = 1.0) {
        Array a(std::move(shape));
        for (idx i = 0; i < a.size(); ++i) a[i] = stddev * normal();
        return a;
    }

    Array uniform_array(std::vector<idx> shape, double lo, double hi) {
        Array a(std::move(shape));
        for (idx i = 0; i < a.size(); ++i) a[i] = uniform(lo, hi);
        return a;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (idx i = static_cast<idx>(v.size()) - 1; i > 0; --i) {
            const idx j = uniform_index(i + 1);
            std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace stylegest
