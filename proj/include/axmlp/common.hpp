#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace axmlp {

/// Thrown for bad user input (missing files, malformed CSV, invalid flags).
/// The CLI maps it to exit code 2; everything else is an internal error (3).
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Bits needed to represent v as an unsigned integer; bitsize(0) == 0.
inline int bitsize(uint64_t v) { return static_cast<int>(std::bit_width(v)); }

/// Global rounding rule: half always rounds up (toward +inf).
inline double round_half_up(double x) { return std::floor(x + 0.5); }

inline int64_t iround_half_up(double x) {
    return static_cast<int64_t>(round_half_up(x));
}

// Deterministic RNG helpers. std::mt19937 output is pinned by the standard,
// but the std distributions are not, so the transforms live here.

using Rng = std::mt19937;

/// Uniform integer in [0, n) via rejection sampling. n must be > 0.
inline uint32_t rng_below(Rng& rng, uint32_t n) {
    const uint32_t limit = (0xffffffffu / n) * n;
    uint32_t x;
    do {
        x = static_cast<uint32_t>(rng());
    } while (x >= limit);
    return x % n;
}

/// Uniform real in [0, 1).
inline double rng_unit(Rng& rng) {
    return static_cast<double>(rng()) * 0x1p-32;
}

/// Uniform real in [lo, hi).
inline double rng_uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * rng_unit(rng);
}

/// Approximate standard normal (Irwin-Hall with 12 summands).
inline double rng_normal(Rng& rng) {
    double s = 0.0;
    for (int i = 0; i < 12; ++i) s += rng_unit(rng);
    return s - 6.0;
}

/// Fisher-Yates shuffle with the deterministic bounded draw above.
template <typename T>
void rng_shuffle(Rng& rng, std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = rng_below(rng, static_cast<uint32_t>(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace axmlp
