#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>

#include "mtr/util/error.hpp"

/// Little-endian primitives for the binary model/checkpoint containers.
namespace mtr::binio {

inline void put_u32(std::string& out, uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.append(b, 4);
}

inline void put_u64(std::string& out, uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.append(b, 8);
}

inline void put_f64(std::string& out, double v) {
    static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559);
    put_u64(out, std::bit_cast<uint64_t>(v));
}

inline void put_str(std::string& out, const std::string& s) {
    put_u64(out, s.size());
    out += s;
}

inline void need(const std::string& in, size_t pos, size_t n) {
    if (pos + n > in.size()) fail("binary data truncated");
}

inline uint32_t get_u32(const std::string& in, size_t& pos) {
    need(in, pos, 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(in[pos + i])) << (8 * i);
    pos += 4;
    return v;
}

inline uint64_t get_u64(const std::string& in, size_t& pos) {
    need(in, pos, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(in[pos + i])) << (8 * i);
    pos += 8;
    return v;
}

inline double get_f64(const std::string& in, size_t& pos) {
    return std::bit_cast<double>(get_u64(in, pos));
}

inline std::string get_str(const std::string& in, size_t& pos) {
    uint64_t n = get_u64(in, pos);
    need(in, pos, n);
    std::string s = in.substr(pos, n);
    pos += n;
    return s;
}

}  // namespace mtr::binio
