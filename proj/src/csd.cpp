#include "axmlp/csd.hpp"

namespace axmlp {

CsdForm csd(uint64_t magnitude) {
    CsdForm form;
    uint64_t v = magnitude;
    while (v != 0) {
        int8_t d = 0;
        if (v & 1) {
            d = static_cast<int8_t>(2 - static_cast<int>(v & 3));  // +1 for ...01, -1 for ...11
            v -= static_cast<uint64_t>(static_cast<int64_t>(d));
        }
        form.digits.push_back(d);
        v >>= 1;
    }
    return form;
}

}  // namespace axmlp
