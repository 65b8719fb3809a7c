#include "mtr/model/translate.hpp"

#include <algorithm>

namespace mtr {

std::string translate_line(const Transformer& model, const TranslationAssets& assets,
                           const std::string& line, const TranslateOptions& opts) {
    TokenSeq src_tokens = segment(assets.src_seg, line);
    std::vector<int32_t> src = assets.src_vocab.ids(src_tokens);
    size_t max_len = opts.max_len ? opts.max_len : 2 * src.size() + 8;
    DecodeResult r = opts.beam_width <= 1 ? model.greedy(src, max_len)
                                          : model.beam(src, opts.beam_width, max_len);
    return detokenize(assets.tgt_vocab.tokens(r.ids));
}

std::vector<std::string> translate_lines(const Transformer& model,
                                         const TranslationAssets& assets,
                                         const std::vector<std::string>& lines,
                                         const TranslateOptions& opts) {
    std::vector<std::string> out;
    out.reserve(lines.size());
    for (const std::string& line : lines) {
        out.push_back(translate_line(model, assets, line, opts));
    }
    return out;
}

}  // namespace mtr
