#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace afpca {

/// splitmix64 step; used to derive independent sub-seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic seed for (cell, replicate) jobs derived from a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t cell, std::uint64_t replicate) {
    std::uint64_t s = base;
    std::uint64_t h = splitmix64(s);
    s = h ^ (cell * 0xd1342543de82ef95ULL);
    h = splitmix64(s);
    s = h ^ (replicate * 0xaf251af3b0f025b5ULL);
    return splitmix64(s);
}

/// Seeded stream of standard normal draws.
///
/// Uses mt19937_64 uniforms with an explicit Box-Muller transform so the
/// sequence is identical across standard library implementations
/// (std::normal_distribution is not pinned by the standard).
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : gen_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        if (u1 <= 0.0) u1 = 0x1p-53;
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1p-53;
    }

    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace afpca
