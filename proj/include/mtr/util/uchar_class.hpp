#pragma once

#include <cstdint>

namespace mtr {

/// True if the scalar value has Unicode general category P* or S*
/// (punctuation or symbol).
bool is_punct_or_symbol(char32_t cp);

}  // namespace mtr
