#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "ganlab/errors.hpp"

namespace ganlab {

// Deterministic, platform-independent random stream (xoshiro256++ seeded
// via splitmix64). Streams are derived from a master seed plus a label so
// that adding a consumer never perturbs the draws of existing ones.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) { seed_state(seed); }

    RngStream(std::uint64_t master, std::string_view label) {
        std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
        for (char c : label) {
            h ^= static_cast<std::uint8_t>(c);
            h *= 0x100000001b3ULL;
        }
        seed_state(master ^ h);
    }

    std::uint64_t next_u64() {
        auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw ContractError("RngStream::uniform_int: n must be positive");
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    // Marsaglia-Tsang, with the shape<1 boost Gamma(a) = Gamma(a+1) * U^(1/a).
    double gamma(double shape) {
        if (shape <= 0.0) throw ContractError("RngStream::gamma: shape must be positive");
        if (shape < 1.0) {
            double u;
            do {
                u = uniform();
            } while (u <= 0.0);
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, vcb;
            do {
                x = normal();
                vcb = 1.0 + c * x;
            } while (vcb <= 0.0);
            const double v = vcb * vcb * vcb;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        return x / (x + y);
    }

    // Fisher-Yates in-place shuffle.
    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (std::size_t i = xs.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(xs[i - 1], xs[j]);
        }
    }

  private:
    void seed_state(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& s : s_) {
            // splitmix64
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            s = z ^ (z >> 31);
        }
    }

    std::array<std::uint64_t, 4> s_{};
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace ganlab
