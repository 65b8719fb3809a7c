#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mtr/model/checkpoint.hpp"
#include "mtr/model/transformer.hpp"

namespace mtr {

/// Decoding settings shared by the CLI and the experiment harness.
struct TranslateOptions {
    size_t beam_width = 1;  // 1 = greedy
    /// Hard cap on output tokens; 0 means 2·source_tokens + 8.
    size_t max_len = 0;
};

/// Segments one source line, decodes, and renders the target tokens back to
/// text. Empty lines translate to empty lines.
std::string translate_line(const Transformer& model, const TranslationAssets& assets,
                           const std::string& line, const TranslateOptions& opts = {});

std::vector<std::string> translate_lines(const Transformer& model,
                                         const TranslationAssets& assets,
                                         const std::vector<std::string>& lines,
                                         const TranslateOptions& opts = {});

}  // namespace mtr
