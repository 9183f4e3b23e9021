#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace bandex {

/// Seeded random stream. Every random draw in the library goes through one of these.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) from the top 53 bits of one engine output.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() { return normal_(engine_); }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n));
    }

    /// Draw from a probability vector by inverse CDF. Zero entries are never returned.
    int categorical(const Eigen::VectorXd& probs) {
        const double u = uniform();
        double acc = 0.0;
        int last = -1;
        for (Eigen::Index a = 0; a < probs.size(); ++a) {
            if (probs[a] <= 0.0) continue;
            acc += probs[a];
            last = static_cast<int>(a);
            if (u < acc) return last;
        }
        return last;  // rounding left u above the accumulated total
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Derives an independent stream seed from a base seed and a tag (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace bandex
