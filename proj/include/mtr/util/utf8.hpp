#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mtr::utf8 {

/// Decodes a UTF-8 string into Unicode scalar values.
/// Throws mtr::Error on malformed input (truncated sequences, overlong
/// encodings, surrogates, values beyond U+10FFFF).
std::vector<char32_t> decode(std::string_view text);

/// Decodes the scalar value starting at byte `pos` and advances `pos` past
/// it. Same error behavior as decode().
char32_t decode_next(std::string_view text, size_t& pos);

/// True if `text` is well-formed UTF-8.
bool valid(std::string_view text);

/// Encodes one scalar value; appends to `out`.
void append(std::string& out, char32_t cp);

/// Encodes a scalar sequence back into a UTF-8 string.
std::string encode(const std::vector<char32_t>& cps);

/// Encodes a single scalar value.
std::string encode_one(char32_t cp);

}  // namespace mtr::utf8
