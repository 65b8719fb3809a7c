#include "mtr/util/utf8.hpp"

#include "mtr/util/error.hpp"

namespace mtr::utf8 {

namespace {

// Returns the decoded scalar and advances `i`, or returns 0xFFFFFFFF on error.
inline uint32_t decode_at(std::string_view s, size_t& i) {
    const auto byte = [&](size_t k) { return static_cast<uint8_t>(s[k]); };
    uint8_t b0 = byte(i);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len;
    uint32_t cp;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return 0xFFFFFFFF;
    }
    if (i + static_cast<size_t>(len) > s.size()) return 0xFFFFFFFF;
    for (int k = 1; k < len; ++k) {
        uint8_t b = byte(i + static_cast<size_t>(k));
        if ((b & 0xC0) != 0x80) return 0xFFFFFFFF;
        cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlong encodings, surrogates, out-of-range values.
    static constexpr uint32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMin[len]) return 0xFFFFFFFF;
    if (cp >= 0xD800 && cp <= 0xDFFF) return 0xFFFFFFFF;
    if (cp > 0x10FFFF) return 0xFFFFFFFF;
    i += static_cast<size_t>(len);
    return cp;
}

}  // namespace

std::vector<char32_t> decode(std::string_view text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        size_t at = i;
        uint32_t cp = decode_at(text, i);
        if (cp == 0xFFFFFFFF)
            fail("invalid UTF-8 at byte offset " + std::to_string(at));
        out.push_back(static_cast<char32_t>(cp));
    }
    return out;
}

char32_t decode_next(std::string_view text, size_t& pos) {
    size_t at = pos;
    uint32_t cp = decode_at(text, pos);
    if (cp == 0xFFFFFFFF) fail("invalid UTF-8 at byte offset " + std::to_string(at));
    return static_cast<char32_t>(cp);
}

bool valid(std::string_view text) {
    size_t i = 0;
    while (i < text.size()) {
        if (decode_at(text, i) == 0xFFFFFFFF) return false;
    }
    return true;
}

void append(std::string& out, char32_t cp) {
    uint32_t c = cp;
    if (c < 0x80) {
        out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (c >> 6)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (c >> 12)));
        out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (c >> 18)));
        out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
}

std::string encode(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) append(out, cp);
    return out;
}

std::string encode_one(char32_t cp) {
    std::string out;
    append(out, cp);
    return out;
}

}  // namespace mtr::utf8
