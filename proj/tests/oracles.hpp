#pragma once

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <vector>

#include "axmlp/axneuron.hpp"

namespace testutil {

// Independent bit-slice: sum bit_j(p) * 2^j over the top k positions of an
// n-bit field, extracting each bit by integer division.
inline uint64_t kept_msbs_oracle(uint64_t p, int n, int k) {
    if (k >= n) return p;
    uint64_t out = 0;
    for (int j = n - k; j < n; ++j) {
        const uint64_t bit = (p / (uint64_t{1} << j)) % 2;
        out += bit * (uint64_t{1} << j);
    }
    return out;
}

// Brute-force approximate sum: split by coefficient sign, apply the kept-MSB
// rule per low-significance product, and fold the negative subtotal in as
// plain arithmetic using the one's-complement identity ~x = -x - 1.
inline int64_t axsum_oracle(const std::vector<axmlp::AxProduct>& products, int64_t bias,
                            std::optional<double> g_threshold, int k) {
    int64_t s_p = 0, s_n = 0;
    bool negative_branch = bias < 0;
    for (const auto& prod : products) {
        if (prod.coefficient == 0) continue;
        const uint64_t mag = static_cast<uint64_t>(std::llabs(prod.coefficient));
        int mag_bits = 0;
        for (uint64_t v = mag; v; v /= 2) ++mag_bits;
        const int n = mag_bits + prod.input_width;
        uint64_t p = mag * static_cast<uint64_t>(prod.input);
        if (g_threshold && prod.g <= *g_threshold) p = kept_msbs_oracle(p, n, k);
        if (prod.coefficient > 0) {
            s_p += static_cast<int64_t>(p);
        } else {
            s_n += static_cast<int64_t>(p);
            negative_branch = true;
        }
    }
    if (bias >= 0)
        s_p += bias;
    else
        s_n += -bias;
    return negative_branch ? s_p + (-s_n - 1) : s_p;
}

}  // namespace testutil
