#pragma once

#include <cstdint>
#include <string>

#include "mtr/util/config.hpp"

namespace mtr {

enum class NormPlacement { Post, Pre };

std::string norm_placement_name(NormPlacement p);
NormPlacement parse_norm_placement(const std::string& s);

/// Architecture hyperparameters. Everything the checkpoint needs to rebuild
/// the network shape lives here; training settings are TrainConfig.
struct ModelConfig {
    size_t d_model = 512;
    size_t d_ffn = 1024;
    size_t heads = 4;
    size_t enc_layers = 6;
    size_t dec_layers = 6;
    double dropout = 0.1;
    NormPlacement norm_placement = NormPlacement::Post;
    bool transparent_attention = false;
    bool share_embeddings = false;
    size_t src_vocab = 0;
    size_t tgt_vocab = 0;
    size_t max_positions = 512;

    /// Throws on invariant violations: heads must divide d_model, at least
    /// one layer per stack, dropout in [0,1), positive dimensions and vocab
    /// sizes, shared embeddings require equal vocabularies.
    void validate() const;

    /// Reads the model.* keys of a run config. Vocab sizes are not read:
    /// they come from the data.
    static ModelConfig from_config(Config& cfg);

    /// key = value text, one line per field; parseable by from_text.
    std::string to_text() const;
    static ModelConfig from_text(const std::string& text);

    size_t head_dim() const { return d_model / heads; }
};

/// Optimization settings for train_model.
struct TrainConfig {
    double lr = 1e-3;  // peak learning rate after warmup
    size_t warmup_steps = 400;
    size_t epochs = 10;
    size_t batch_tokens = 1024;  // max target tokens per optimizer step
    double label_smoothing = 0.1;
    uint64_t seed = 1;

    void validate() const;
    static TrainConfig from_config(Config& cfg);
};

}  // namespace mtr
