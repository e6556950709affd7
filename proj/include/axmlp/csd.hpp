#pragma once

#include <cstdint>
#include <vector>

namespace axmlp {

/// Canonical signed-digit form of a nonnegative magnitude, LSB first.
/// No two adjacent digits are nonzero; the nonzero-digit count is minimal
/// over all signed-digit representations.
struct CsdForm {
    std::vector<int8_t> digits;  // each in {-1, 0, +1}

    int nonzero_digits() const {
        int n = 0;
        for (int8_t d : digits) n += (d != 0);
        return n;
    }

    int64_t value() const {
        int64_t v = 0;
        for (size_t i = 0; i < digits.size(); ++i) v += int64_t{digits[i]} << i;
        return v;
    }
};

CsdForm csd(uint64_t magnitude);

}  // namespace axmlp
