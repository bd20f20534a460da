#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace orl {

/// splitmix64 (Steele/Lea/Flood). Counter-style generator: the i-th output is
/// a fixed mix of seed + i*GOLDEN, so streams are reproducible across
/// platforms using only integer arithmetic. Uniform doubles are formed from
/// the top 53 bits, which keeps data generation bit-stable under IEEE-754.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Vector with i.i.d. uniform entries in [lo, hi).
    Eigen::VectorXd vector_uniform(int n, double lo, double hi) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
        return v;
    }

    /// Uniform draw from the closed n-ball of the given radius, by rejection
    /// from the cube. Avoids libm so the stream stays platform-stable.
    /// radius == 0 returns the zero vector without consuming the stream.
    Eigen::VectorXd ball(int n, double radius) {
        if (radius == 0.0) return Eigen::VectorXd::Zero(n);
        for (;;) {
            Eigen::VectorXd v = vector_uniform(n, -1.0, 1.0);
            if (v.squaredNorm() <= 1.0) return radius * v;
        }
    }

    /// Derive a decorrelated child seed for substream `tag`.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
        SplitMix64 s(seed ^ (0x632BE59BD9B4E019ULL * (tag + 1)));
        return s.next();
    }

private:
    std::uint64_t state_;
};

}  // namespace orl
