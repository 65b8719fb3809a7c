#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mtr/model/config.hpp"
#include "mtr/model/tensor.hpp"
#include "mtr/util/rng.hpp"

namespace mtr {

/// Result of decoding one source sentence.
struct DecodeResult {
    std::vector<int32_t> ids;  // target ids, end marker stripped
    bool truncated = false;    // hit max_len before the end marker
};

/// Encoder-decoder Transformer, double precision, processed one sentence at
/// a time (batching is gradient accumulation across sentences).
///
/// Post-norm layers compute x = LN(x + Dropout(Sublayer(x))); pre-norm
/// layers compute x = x + Dropout(Sublayer(LN(x))) with one extra final
/// normalization per stack. With transparent attention every decoder layer
/// cross-attends to its own softmax-weighted combination of the embedding
/// output and each encoder layer's output instead of the top layer only.
///
/// Sequence conventions: the source gets one end marker appended; the
/// decoder consumes [begin, y1..yT] and is trained against [y1..yT, end].
/// Ids must be < the configured vocab sizes; sequences longer than
/// max_positions are an error.
class Transformer {
public:
    /// Fresh model with seeded initialization: Xavier-uniform projection
    /// matrices, Gaussian embeddings scaled by d_model^-1/2, unit gains,
    /// zero biases, zero (= uniform) transparent-attention logits.
    static Transformer build(const ModelConfig& config, uint64_t seed);

    const ModelConfig& config() const { return config_; }

    /// Name-keyed parameter table, iterated in name order everywhere
    /// (optimizer, checkpoints, averaging), which makes runs reproducible.
    std::map<std::string, Tensor>& params() { return params_; }
    const std::map<std::string, Tensor>& params() const { return params_; }
    Tensor& param(const std::string& name);
    const Tensor& param(const std::string& name) const;

    /// Total trainable scalars.
    size_t param_count() const;

    void zero_grads();

    /// Label-smoothed cross entropy, summed over the tgt.size()+1 target
    /// positions, gradients accumulated into the parameter .g buffers.
    /// dropout_rng enables dropout (training); null disables it.
    double forward_backward(const std::vector<int32_t>& src, const std::vector<int32_t>& tgt,
                            double label_smoothing, Rng* dropout_rng);

    /// Forward-only loss, dropout off, no gradient writes.
    double eval_loss(const std::vector<int32_t>& src, const std::vector<int32_t>& tgt,
                     double label_smoothing) const;

    /// Argmax decoding. Empty source returns an empty result.
    DecodeResult greedy(const std::vector<int32_t>& src, size_t max_len) const;

    /// Length-normalized beam search; beam(1) matches greedy exactly.
    DecodeResult beam(const std::vector<int32_t>& src, size_t width, size_t max_len) const;

    /// Replaces parameter values (not gradients). Errors unless the name set
    /// and every shape match this model exactly.
    void load_params(const std::map<std::string, Tensor>& src);

private:
    Transformer() = default;

    ModelConfig config_;
    std::map<std::string, Tensor> params_;
};

}  // namespace mtr
