#ifndef JLLB_RNG_HPP
#define JLLB_RNG_HPP

#include <cmath>
#include <cstdint>

namespace jllb {

// Counter-based deterministic random stream. Every draw is a pure function
// of (seed, index), so parallel or out-of-order generation produces the
// same values as sequential generation.
namespace rng {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive a child stream key, e.g. one per trial or per entity.
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed ^ mix64(index + 0x632be59bd9b4e019ULL));
}

// Uniform in (0, 1]; never returns 0 so it is safe under log().
inline double u01(std::uint64_t seed, std::uint64_t index) {
    const std::uint64_t bits = mix64(derive(seed, index));
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

// Uniform in [lo, hi).
inline double uniform(std::uint64_t seed, std::uint64_t index, double lo, double hi) {
    return lo + (hi - lo) * (u01(seed, index) - 0x1.0p-53);
}

// Standard normal via Box-Muller on two counter-indexed uniforms.
inline double gaussian(std::uint64_t seed, std::uint64_t index) {
    const double u1 = u01(seed, 2 * index);
    const double u2 = u01(seed, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// Uniform integer in [0, bound) by rejection-free scaling (bound << 2^64).
inline std::uint64_t below(std::uint64_t seed, std::uint64_t index, std::uint64_t bound) {
    const std::uint64_t bits = mix64(derive(seed, index));
    // 128-bit multiply-shift keeps the distribution near-uniform for small bounds.
    return static_cast<std::uint64_t>((static_cast<__uint128_t>(bits) * bound) >> 64);
}

} // namespace rng
} // namespace jllb

#endif // JLLB_RNG_HPP
