#include "mtr/util/uchar_class.hpp"

#include <algorithm>
#include <iterator>

namespace mtr {

namespace {

struct Range {
    uint32_t lo, hi;
};

constexpr Range kPunctSymbol[] = {
#include "punct_table.inc"
};

}  // namespace

bool is_punct_or_symbol(char32_t cp) {
    uint32_t c = cp;
    auto it = std::upper_bound(std::begin(kPunctSymbol), std::end(kPunctSymbol), c,
                               [](uint32_t v, const Range& r) { return v < r.lo; });
    if (it == std::begin(kPunctSymbol)) return false;
    --it;
    return c >= it->lo && c <= it->hi;
}

}  // namespace mtr
