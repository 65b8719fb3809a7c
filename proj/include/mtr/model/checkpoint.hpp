#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mtr/model/config.hpp"
#include "mtr/model/tensor.hpp"
#include "mtr/model/transformer.hpp"
#include "mtr/text/segmentation.hpp"
#include "mtr/text/vocab.hpp"

namespace mtr {

/// Everything needed to turn raw text into model ids and back: the
/// segmentation models and vocabularies of both sides. Stored inside every
/// checkpoint so a checkpoint file is a complete translation model.
struct TranslationAssets {
    SegmentationModel src_seg, tgt_seg;
    Vocab src_vocab, tgt_vocab;
};

/// One saved training state. The parameter tensors carry values only;
/// gradient buffers are not serialized.
struct Checkpoint {
    uint64_t epoch = 0;
    double val_ppl = 0.0;
    ModelConfig config;
    TranslationAssets assets;
    std::map<std::string, Tensor> params;

    /// Rebuilds a runnable model from the stored config and parameters.
    Transformer restore() const;
};

/// Binary container: magic, version, epoch, validation perplexity, config
/// text, both segmentation models and vocabularies, then the name-sorted
/// parameter tensors as little-endian doubles.
void save_checkpoint(const std::string& path, const Transformer& model,
                     const TranslationAssets& assets, uint64_t epoch, double val_ppl);

Checkpoint load_checkpoint(const std::string& path);

/// Element-wise mean of the parameter tensors. Errors on an empty list, on
/// name-set mismatch, or on shape mismatch; epoch/val_ppl/config/assets come
/// from the first entry.
Checkpoint average_checkpoints(const std::vector<Checkpoint>& ckpts);

/// Indices of the k best entries by (val_ppl, epoch) ascending — ties on
/// perplexity go to the earlier epoch. Errors if fewer than k entries.
std::vector<size_t> best_checkpoints(const std::vector<Checkpoint>& ckpts, size_t k);

}  // namespace mtr
