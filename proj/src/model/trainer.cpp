#include "mtr/model/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "mtr/kernels/kernels.hpp"
#include "mtr/util/error.hpp"
#include "mtr/util/rng.hpp"

namespace mtr {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

struct AdamState {
    std::vector<double> m, v;
};

size_t target_tokens(const std::pair<std::vector<int32_t>, std::vector<int32_t>>& pair) {
    return pair.second.size() + 1;  // end marker included
}

}  // namespace

double corpus_perplexity(const Transformer& model, const PairCorpus& pairs) {
    if (pairs.empty()) throw Error("perplexity of an empty corpus is undefined");
    double nll = 0.0;
    size_t tokens = 0;
    for (const auto& [src, tgt] : pairs) {
        nll += model.eval_loss(src, tgt, 0.0);
        tokens += tgt.size() + 1;
    }
    return std::exp(nll / static_cast<double>(tokens));
}

std::vector<EpochStats> train_model(Transformer& model, const PairCorpus& train,
                                    const PairCorpus& val, const TrainConfig& tc,
                                    const EpochCallback& on_epoch) {
    tc.validate();
    if (train.empty()) throw Error("training corpus is empty");
    for (const auto& pair : train) {
        if (target_tokens(pair) > tc.batch_tokens) {
            throw Error("a sentence of " + std::to_string(target_tokens(pair)) +
                        " target tokens exceeds batch_tokens " +
                        std::to_string(tc.batch_tokens));
        }
    }

    std::map<std::string, AdamState> adam;
    for (const auto& [name, t] : model.params()) {
        adam[name] = {std::vector<double>(t.numel(), 0.0), std::vector<double>(t.numel(), 0.0)};
    }

    std::vector<EpochStats> stats;
    size_t step = 0;
    for (size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
        // two independent substreams per epoch: shuffle and dropout
        Rng shuffle_rng(Rng::derive(tc.seed, 2 * epoch));
        Rng drop_rng(Rng::derive(tc.seed, 2 * epoch + 1));

        std::vector<size_t> order(train.size());
        std::iota(order.begin(), order.end(), 0);
        for (size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        }

        double epoch_loss = 0.0;
        size_t epoch_tokens = 0;
        size_t at = 0;
        while (at < order.size()) {
            // greedy packing by target token count
            size_t batch_end = at, batch_tokens = 0;
            while (batch_end < order.size() &&
                   (batch_end == at ||
                    batch_tokens + target_tokens(train[order[batch_end]]) <= tc.batch_tokens)) {
                batch_tokens += target_tokens(train[order[batch_end]]);
                ++batch_end;
            }

            model.zero_grads();
            double batch_loss = 0.0;
            for (size_t i = at; i < batch_end; ++i) {
                const auto& [src, tgt] = train[order[i]];
                batch_loss += model.forward_backward(src, tgt, tc.label_smoothing, &drop_rng);
            }
            if (!std::isfinite(batch_loss)) {
                throw Error("training diverged: non-finite loss at epoch " +
                            std::to_string(epoch) + ", step " + std::to_string(step + 1));
            }
            epoch_loss += batch_loss;
            epoch_tokens += batch_tokens;

            ++step;
            double lr = tc.lr * std::min(static_cast<double>(step) /
                                             static_cast<double>(tc.warmup_steps),
                                         std::sqrt(static_cast<double>(tc.warmup_steps) /
                                                   static_cast<double>(step)));
            double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
            double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
            double inv_tokens = 1.0 / static_cast<double>(batch_tokens);
            for (auto& [name, t] : model.params()) {
                kern::active().scale(t.numel(), inv_tokens, t.g.data());
                AdamState& s = adam[name];
                kern::active().adam_update(t.numel(), t.v.data(), t.g.data(), s.m.data(),
                                           s.v.data(), lr, kBeta1, kBeta2, kAdamEps, bc1, bc2);
            }
            at = batch_end;
        }

        EpochStats es;
        es.epoch = epoch;
        es.train_loss = epoch_loss / static_cast<double>(epoch_tokens);
        es.val_ppl = val.empty() ? std::numeric_limits<double>::quiet_NaN()
                                 : corpus_perplexity(model, val);
        stats.push_back(es);
        if (on_epoch) on_epoch(model, es);
    }
    return stats;
}

}  // namespace mtr
