#pragma once

#include <cmath>
#include <cstdint>
#include <Eigen/Core>

namespace oukl {

/// splitmix64; used to expand seeds into generator state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ with per-index stream derivation. Streams derived from
/// (seed, index) are independent of worker count, so parallel sweeps give
/// bit-identical results however the indices are scheduled.
class Rng {
public:
    Rng() : Rng(0, 0) {}

    Rng(std::uint64_t seed, std::uint64_t stream_index) {
        std::uint64_t s = seed ^ (0x6a09e667f3bcc909ULL * (stream_index + 1));
        for (auto& word : state_) word = splitmix64(s);
        have_spare_ = false;
        spare_ = 0.0;
    }

    static Rng stream(std::uint64_t seed, std::uint64_t stream_index) {
        return Rng(seed, stream_index);
    }

    std::uint64_t next_u64() {
        auto rotl = [](std::uint64_t v, int k) {
            return (v << k) | (v >> (64 - k));
        };
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on [0,1).
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0,1]; safe as a log() argument.
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Uniform on [a,b).
    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Standard normal via the Marsaglia polar method (caches its pair).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    /// Uniform direction on the unit sphere in R^n.
    Eigen::VectorXd on_sphere(int n) {
        Eigen::VectorXd d(n);
        double norm2;
        do {
            for (int i = 0; i < n; ++i) d[i] = normal();
            norm2 = d.squaredNorm();
        } while (norm2 == 0.0);
        return d / std::sqrt(norm2);
    }

    /// Uniform point in the unit ball of R^n.
    Eigen::VectorXd in_ball(int n) {
        const double f = std::pow(uniform01(), 1.0 / n);
        return f * on_sphere(n);
    }

private:
    std::uint64_t state_[4];
    bool have_spare_;
    double spare_;
};

} // namespace oukl
