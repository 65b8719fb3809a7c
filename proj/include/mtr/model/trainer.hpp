#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mtr/model/config.hpp"
#include "mtr/model/transformer.hpp"

namespace mtr {

/// Source/target id sequences, end markers not included (the model adds
/// them).
using PairCorpus = std::vector<std::pair<std::vector<int32_t>, std::vector<int32_t>>>;

struct EpochStats {
    size_t epoch = 0;        // 1-based
    double train_loss = 0.0; // label-smoothed loss per target token
    double val_ppl = 0.0;    // unsmoothed validation perplexity
};

/// Called after every epoch, e.g. to save a checkpoint.
using EpochCallback = std::function<void(const Transformer&, const EpochStats&)>;

/// Adam training with an inverse-square-root schedule: the learning rate
/// climbs linearly to the configured peak over warmup_steps, then decays as
/// sqrt(warmup/step). Sentences are shuffled per epoch and packed greedily
/// into batches of at most batch_tokens target tokens; gradients accumulate
/// per sentence and are normalized by the batch's target token count.
/// Deterministic: the same seed yields bit-identical parameters.
///
/// Throws when the corpus is empty, when any sentence exceeds batch_tokens
/// target tokens, or when the loss turns non-finite (the callback has
/// already seen every completed epoch, so partial checkpoints survive).
std::vector<EpochStats> train_model(Transformer& model, const PairCorpus& train,
                                    const PairCorpus& val, const TrainConfig& tc,
                                    const EpochCallback& on_epoch = nullptr);

/// Unsmoothed perplexity of the pairs under the model: exp of mean negative
/// log-likelihood per target token (end markers included).
double corpus_perplexity(const Transformer& model, const PairCorpus& pairs);

}  // namespace mtr
