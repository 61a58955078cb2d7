#ifndef GPRC_RNG_HPP
#define GPRC_RNG_HPP
#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace gprc {

/// Deterministic RNG with self-contained uniform/normal transforms (no reliance
/// on implementation-defined stdlib distributions), so identical seeds reproduce
/// identical streams.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// splitmix64 mixing for derived sub-seeds.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, const std::string& label) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : label) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return derive_seed(base, h);
}

}  // namespace gprc

#endif  // GPRC_RNG_HPP
