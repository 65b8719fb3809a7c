#include "mtr/harness/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <utility>

#include "mtr/lm/kn_lm.hpp"
#include "mtr/metrics/bleu.hpp"
#include "mtr/metrics/sensitivity.hpp"
#include "mtr/metrics/unseen.hpp"
#include "mtr/model/checkpoint.hpp"
#include "mtr/model/trainer.hpp"
#include "mtr/model/translate.hpp"
#include "mtr/text/noise.hpp"
#include "mtr/text/segmentation.hpp"
#include "mtr/text/vocab.hpp"
#include "mtr/util/error.hpp"
#include "mtr/util/io.hpp"
#include "mtr/util/rng.hpp"

namespace mtr {

namespace fs = std::filesystem;

namespace {

// ---- stable naming -------------------------------------------------------

std::string percent_key(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "bleu.p%02d", index);
    return buf;
}

std::string matrix_cell_id(const SegLevel& level, const std::string& train_kind) {
    return level.name() + ".train-" + train_kind;
}

std::string depth_cell_id(size_t depth, bool transparent) {
    return "d" + std::to_string(depth) + (transparent ? ".transparent" : ".plain");
}

std::string test_cell_id(size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "test%02zu", index);
    return buf;
}

// ---- shared, read-only inputs (threads share one copy) ---------------------

struct SharedData {
    std::vector<std::string> train_src, train_tgt;
    std::vector<std::string> val_src, val_tgt;
    std::vector<std::string> test_src, test_tgt;
    std::vector<char32_t> alphabet;
    ConfusionLexicon lexicon;
    bool has_lexicon = false;

    // NoiseSweep: level index -> corrupted test source (0 = clean)
    std::map<int, SweepLevel> sweep;
    // MatchedNoiseMatrix: per train kind, corrupted train/val sources; per
    // test kind, corrupted test source ("clean" entries are the originals)
    std::map<std::string, std::vector<std::string>> matrix_train_src;
    std::map<std::string, std::vector<std::string>> matrix_val_src;
    std::map<std::string, std::vector<std::string>> matrix_test_src;

    // DomainReport
    KnLanguageModel lm;
    std::unordered_set<std::string> train_words;
    std::vector<std::vector<std::string>> tests;
};

std::vector<std::string> load_side(const std::string& what, const std::string& path) {
    std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) throw Error("plan data " + what + " is empty: " + path);
    return lines;
}

void load_parallel(const ExperimentPlan& plan, SharedData& d) {
    d.train_src = load_side("train_src", plan.train_src);
    d.train_tgt = load_side("train_tgt", plan.train_tgt);
    d.val_src = load_side("val_src", plan.val_src);
    d.val_tgt = load_side("val_tgt", plan.val_tgt);
    d.test_src = load_side("test_src", plan.test_src);
    d.test_tgt = load_side("test_tgt", plan.test_tgt);
    auto check = [](const std::string& what, size_t a, size_t b) {
        if (a != b) {
            throw Error("plan data " + what + " sides differ in length (" +
                        std::to_string(a) + " vs " + std::to_string(b) + ")");
        }
    };
    check("train", d.train_src.size(), d.train_tgt.size());
    check("val", d.val_src.size(), d.val_tgt.size());
    check("test", d.test_src.size(), d.test_tgt.size());
    d.alphabet = default_alphabet(d.train_src);
}

void maybe_load_lexicon(const ExperimentPlan& plan, SharedData& d, bool needed) {
    if (!needed) return;
    d.lexicon = load_confusion_lexicon(plan.noise_lexicon);
    d.has_lexicon = true;
}

SharedData prepare_shared(const ExperimentPlan& plan) {
    SharedData d;
    switch (plan.kind) {
        case PlanKind::VocabSweep:
            load_parallel(plan, d);
            break;
        case PlanKind::NoiseSweep: {
            load_parallel(plan, d);
            maybe_load_lexicon(plan, d, plan.noise_kind == NoiseKind::Natural);
            NoiseSpec spec;
            spec.kind = plan.noise_kind;
            spec.seed = Rng::derive(plan.seed, stable_hash64("noise-sweep"));
            spec.alphabet = d.alphabet;
            std::vector<SweepLevel> levels =
                build_noise_sweep(d.test_src, spec, d.has_lexicon ? &d.lexicon : nullptr);
            for (int idx : plan.noise_levels) {
                if (idx == 0) {
                    d.sweep[0] = SweepLevel{0, 0.0, d.test_src};
                } else {
                    d.sweep[idx] = levels[static_cast<size_t>(idx) - 1];
                }
            }
            break;
        }
        case PlanKind::MatchedNoiseMatrix: {
            load_parallel(plan, d);
            bool natural = false;
            for (NoiseKind k : plan.matrix_kinds) natural = natural || k == NoiseKind::Natural;
            maybe_load_lexicon(plan, d, natural);
            d.matrix_train_src["clean"] = d.train_src;
            d.matrix_val_src["clean"] = d.val_src;
            d.matrix_test_src["clean"] = d.test_src;
            for (size_t i = 0; i < plan.matrix_kinds.size(); ++i) {
                NoiseKind kind = plan.matrix_kinds[i];
                const std::string name = noise_kind_name(kind);
                const ConfusionLexicon* lex = d.has_lexicon ? &d.lexicon : nullptr;
                NoiseSpec spec;
                spec.kind = kind;
                spec.p = plan.train_noise_p;
                spec.alphabet = d.alphabet;
                spec.seed = Rng::derive(plan.seed, stable_hash64("matrix-train-" + name));
                d.matrix_train_src[name] = corrupt_corpus(d.train_src, spec, lex);
                spec.seed = Rng::derive(plan.seed, stable_hash64("matrix-val-" + name));
                d.matrix_val_src[name] = corrupt_corpus(d.val_src, spec, lex);
                spec.seed = Rng::derive(plan.seed, stable_hash64("matrix-test-" + name));
                d.matrix_test_src[name] = corrupt_corpus(d.test_src, spec, lex);
            }
            break;
        }
        case PlanKind::DomainReport: {
            d.train_src = load_side("train_src", plan.train_src);
            d.lm = KnLanguageModel::train(d.train_src, plan.lm_order);
            d.train_words = word_set(d.train_src);
            for (const std::string& path : plan.tests) {
                d.tests.push_back(load_side("tests entry", path));
            }
            break;
        }
        case PlanKind::DepthSweep:
            load_parallel(plan, d);
            break;
    }
    return d;
}

// ---- one trained system ----------------------------------------------------

struct BuiltAssets {
    TranslationAssets assets;
    size_t src_vocab = 0, tgt_vocab = 0;
};

BuiltAssets build_assets(const SegLevel& level, const std::vector<std::string>& train_src,
                         const std::vector<std::string>& train_tgt) {
    BuiltAssets b;
    if (!level.character) {
        b.assets.src_seg = bpe_train(train_src, level.merges);
        b.assets.tgt_seg = bpe_train(train_tgt, level.merges);
    }
    std::vector<TokenSeq> src_tok, tgt_tok;
    src_tok.reserve(train_src.size());
    for (const std::string& l : train_src) src_tok.push_back(segment(b.assets.src_seg, l));
    tgt_tok.reserve(train_tgt.size());
    for (const std::string& l : train_tgt) tgt_tok.push_back(segment(b.assets.tgt_seg, l));
    b.assets.src_vocab = Vocab::from_tokens(src_tok);
    b.assets.tgt_vocab = Vocab::from_tokens(tgt_tok);
    b.src_vocab = b.assets.src_vocab.size();
    b.tgt_vocab = b.assets.tgt_vocab.size();
    return b;
}

PairCorpus encode_pairs(const TranslationAssets& assets, const std::vector<std::string>& src,
                        const std::vector<std::string>& tgt) {
    PairCorpus pairs;
    pairs.reserve(src.size());
    for (size_t i = 0; i < src.size(); ++i) {
        pairs.emplace_back(assets.src_vocab.ids(segment(assets.src_seg, src[i])),
                           assets.tgt_vocab.ids(segment(assets.tgt_seg, tgt[i])));
    }
    return pairs;
}

struct FitResult {
    ModelConfig config;
    std::map<std::string, Tensor> params;  // averaged over the 3 best epochs
    double val_ppl = 0.0;                  // of the averaged parameters
    double dropout = 0.0, lr = 0.0;        // winning grid point
};

struct EpochSnapshot {
    double ppl;
    uint64_t epoch;
    std::map<std::string, Tensor> params;
};

/// Trains once and averages the (up to) 3 best epochs by validation
/// perplexity, ties to the earlier epoch.
FitResult fit_once(const ModelConfig& mc, const TrainConfig& tc, const PairCorpus& train,
                   const PairCorpus& val, uint64_t build_seed) {
    Transformer model = Transformer::build(mc, build_seed);
    std::vector<EpochSnapshot> best;
    train_model(model, train, val, tc, [&](const Transformer& m, const EpochStats& es) {
        best.push_back({es.val_ppl, es.epoch, m.params()});
        std::sort(best.begin(), best.end(), [](const EpochSnapshot& a, const EpochSnapshot& b) {
            return a.ppl != b.ppl ? a.ppl < b.ppl : a.epoch < b.epoch;
        });
        if (best.size() > 3) best.pop_back();
    });

    std::vector<Checkpoint> top;
    for (EpochSnapshot& s : best) {
        Checkpoint c;
        c.epoch = s.epoch;
        c.val_ppl = s.ppl;
        c.config = mc;
        c.params = std::move(s.params);
        top.push_back(std::move(c));
    }
    Checkpoint averaged = average_checkpoints(top);
    Transformer avg_model = averaged.restore();

    FitResult r;
    r.config = mc;
    r.val_ppl = corpus_perplexity(avg_model, val);
    r.params = std::move(averaged.params);
    r.dropout = mc.dropout;
    r.lr = tc.lr;
    return r;
}

/// Grid search over (dropout, lr); the averaged model with the lowest
/// validation perplexity wins, first listed combination on ties.
FitResult fit_grid(const ExperimentPlan& plan, ModelConfig mc, TrainConfig tc,
                   const PairCorpus& train, const PairCorpus& val, uint64_t cell_seed) {
    std::vector<double> dropouts =
        plan.grid_dropout.empty() ? std::vector<double>{mc.dropout} : plan.grid_dropout;
    std::vector<double> lrs = plan.grid_lr.empty() ? std::vector<double>{tc.lr} : plan.grid_lr;

    FitResult winner;
    bool have = false;
    size_t combo = 0;
    for (double dropout : dropouts) {
        for (double lr : lrs) {
            mc.dropout = dropout;
            tc.lr = lr;
            tc.seed = Rng::derive(cell_seed, 100 + combo);
            FitResult r = fit_once(mc, tc, train, val, Rng::derive(cell_seed, 10 + combo));
            if (!have || r.val_ppl < winner.val_ppl) {
                winner = std::move(r);
                have = true;
            }
            ++combo;
        }
    }
    return winner;
}

struct TrainedSystem {
    Transformer model;
    TranslationAssets assets;
    FitResult fit;
    size_t src_vocab = 0, tgt_vocab = 0;
};

TrainedSystem train_system(const ExperimentPlan& plan, const SegLevel& level, ModelConfig mc,
                           const std::vector<std::string>& train_src,
                           const std::vector<std::string>& train_tgt,
                           const std::vector<std::string>& val_src,
                           const std::vector<std::string>& val_tgt, uint64_t cell_seed) {
    BuiltAssets built = build_assets(level, train_src, train_tgt);
    PairCorpus train = encode_pairs(built.assets, train_src, train_tgt);
    PairCorpus val = encode_pairs(built.assets, val_src, val_tgt);
    mc.src_vocab = built.src_vocab;
    mc.tgt_vocab = built.tgt_vocab;
    if (mc.share_embeddings && mc.src_vocab != mc.tgt_vocab) {
        throw Error("share_embeddings needs equal vocabularies; segmentation level " +
                    level.name() + " produced " + std::to_string(mc.src_vocab) + " vs " +
                    std::to_string(mc.tgt_vocab));
    }
    mc.validate();

    FitResult fit = fit_grid(plan, mc, plan.train, train, val, cell_seed);
    Transformer model = Transformer::build(fit.config, 0);
    model.load_params(fit.params);
    return {std::move(model), std::move(built.assets), std::move(fit), built.src_vocab,
            built.tgt_vocab};
}

double bleu_of(const Transformer& model, const TranslationAssets& assets,
               const std::vector<std::string>& src, const std::vector<std::string>& refs,
               size_t beam_width) {
    TranslateOptions opts;
    opts.beam_width = beam_width;
    std::vector<std::string> hyps = translate_lines(model, assets, src, opts);
    return corpus_bleu(hyps, refs).score;
}

void save_system(const ExperimentPlan& plan, const std::string& cell_id,
                 const TrainedSystem& sys) {
    fs::path path = fs::path(plan.out_dir) / "checkpoints" / (cell_id + ".ckpt");
    save_checkpoint(path.string(), sys.model, sys.assets, plan.train.epochs, sys.fit.val_ppl);
}

// ---- cells -----------------------------------------------------------------

struct Cell {
    std::string id;
    std::function<CellResult()> run;
};

CellResult vocab_sweep_cell(const ExperimentPlan& plan, const SharedData& d,
                            const SegLevel& level) {
    uint64_t seed = Rng::derive(plan.seed, stable_hash64(level.name()));
    TrainedSystem sys = train_system(plan, level, plan.model, d.train_src, d.train_tgt,
                                     d.val_src, d.val_tgt, seed);
    save_system(plan, level.name(), sys);
    CellResult r;
    r.status = "done";
    r.label = level.name();
    r.metrics["bleu"] = bleu_of(sys.model, sys.assets, d.test_src, d.test_tgt, plan.beam_width);
    r.metrics["val_ppl"] = sys.fit.val_ppl;
    r.metrics["src_vocab"] = static_cast<double>(sys.src_vocab);
    r.metrics["tgt_vocab"] = static_cast<double>(sys.tgt_vocab);
    r.metrics["dropout"] = sys.fit.dropout;
    r.metrics["lr"] = sys.fit.lr;
    return r;
}

CellResult noise_sweep_cell(const ExperimentPlan& plan, const SharedData& d,
                            const SegLevel& level) {
    uint64_t seed = Rng::derive(plan.seed, stable_hash64(level.name()));
    TrainedSystem sys = train_system(plan, level, plan.model, d.train_src, d.train_tgt,
                                     d.val_src, d.val_tgt, seed);
    save_system(plan, level.name(), sys);
    CellResult r;
    r.status = "done";
    r.label = level.name();
    r.metrics["val_ppl"] = sys.fit.val_ppl;
    r.metrics["dropout"] = sys.fit.dropout;
    r.metrics["lr"] = sys.fit.lr;
    std::vector<std::pair<double, double>> points;
    for (const auto& [idx, lvl] : d.sweep) {
        double bleu = bleu_of(sys.model, sys.assets, lvl.corpus, d.test_tgt, plan.beam_width);
        r.metrics[percent_key(idx)] = bleu;
        points.emplace_back(lvl.p, bleu);
    }
    SensitivityFit fit = fit_sensitivity(points);  // degenerate sweep -> error
    r.metrics["beta"] = fit.beta;
    r.metrics["alpha"] = fit.alpha;
    r.metrics["r2"] = fit.r2;
    return r;
}

CellResult matrix_cell(const ExperimentPlan& plan, const SharedData& d, const SegLevel& level,
                       const std::string& train_kind) {
    const std::string id = matrix_cell_id(level, train_kind);
    uint64_t seed = Rng::derive(plan.seed, stable_hash64(id));
    TrainedSystem sys =
        train_system(plan, level, plan.model, d.matrix_train_src.at(train_kind), d.train_tgt,
                     d.matrix_val_src.at(train_kind), d.val_tgt, seed);
    save_system(plan, id, sys);
    CellResult r;
    r.status = "done";
    r.label = train_kind;
    r.metrics["val_ppl"] = sys.fit.val_ppl;
    r.metrics["dropout"] = sys.fit.dropout;
    r.metrics["lr"] = sys.fit.lr;
    for (const auto& [test_kind, corpus] : d.matrix_test_src) {
        r.metrics["bleu." + test_kind] =
            bleu_of(sys.model, sys.assets, corpus, d.test_tgt, plan.beam_width);
    }
    return r;
}

CellResult domain_cell(const ExperimentPlan& plan, const SharedData& d, size_t index) {
    const std::vector<std::string>& test = d.tests[index];
    CellResult r;
    r.status = "done";
    r.label = fs::path(plan.tests[index]).filename().string();
    r.metrics["sentences"] = static_cast<double>(test.size());
    r.metrics["unseen_pct"] = unseen_rate(test, d.train_words);
    double ppl = d.lm.perplexity(test);
    if (!std::isfinite(ppl)) {
        throw Error("test set '" + r.label +
                    "' has non-finite perplexity under the training-corpus language model "
                    "(degenerate discounts leave unseen words no probability)");
    }
    r.metrics["kn_ppl"] = ppl;
    return r;
}

CellResult depth_cell(const ExperimentPlan& plan, const SharedData& d, size_t depth,
                      bool transparent) {
    const std::string id = depth_cell_id(depth, transparent);
    uint64_t seed = Rng::derive(plan.seed, stable_hash64(id));
    ModelConfig mc = plan.model;
    mc.norm_placement = NormPlacement::Pre;
    mc.enc_layers = depth;
    mc.transparent_attention = transparent;
    SegLevel level = plan.seg_levels.front();
    TrainedSystem sys = train_system(plan, level, mc, d.train_src, d.train_tgt, d.val_src,
                                     d.val_tgt, seed);
    save_system(plan, id, sys);
    CellResult r;
    r.status = "done";
    r.label = id;
    r.metrics["depth"] = static_cast<double>(depth);
    r.metrics["transparent"] = transparent ? 1.0 : 0.0;
    r.metrics["bleu"] = bleu_of(sys.model, sys.assets, d.test_src, d.test_tgt, plan.beam_width);
    r.metrics["val_ppl"] = sys.fit.val_ppl;
    r.metrics["dropout"] = sys.fit.dropout;
    r.metrics["lr"] = sys.fit.lr;
    return r;
}

std::vector<Cell> make_cells(const ExperimentPlan& plan, const SharedData& d) {
    std::vector<Cell> cells;
    switch (plan.kind) {
        case PlanKind::VocabSweep:
            for (const SegLevel& level : plan.seg_levels) {
                cells.push_back({level.name(), [&plan, &d, level] {
                                     return vocab_sweep_cell(plan, d, level);
                                 }});
            }
            break;
        case PlanKind::NoiseSweep:
            for (const SegLevel& level : plan.seg_levels) {
                cells.push_back({level.name(), [&plan, &d, level] {
                                     return noise_sweep_cell(plan, d, level);
                                 }});
            }
            break;
        case PlanKind::MatchedNoiseMatrix:
            for (const SegLevel& level : plan.seg_levels) {
                std::vector<std::string> kinds = {"clean"};
                for (NoiseKind k : plan.matrix_kinds) kinds.push_back(noise_kind_name(k));
                for (const std::string& kind : kinds) {
                    cells.push_back({matrix_cell_id(level, kind), [&plan, &d, level, kind] {
                                         return matrix_cell(plan, d, level, kind);
                                     }});
                }
            }
            break;
        case PlanKind::DomainReport:
            for (size_t i = 0; i < plan.tests.size(); ++i) {
                cells.push_back(
                    {test_cell_id(i), [&plan, &d, i] { return domain_cell(plan, d, i); }});
            }
            break;
        case PlanKind::DepthSweep:
            for (size_t depth : plan.depths) {
                for (bool transparent : {false, true}) {
                    cells.push_back({depth_cell_id(depth, transparent),
                                     [&plan, &d, depth, transparent] {
                                         return depth_cell(plan, d, depth, transparent);
                                     }});
                }
            }
            break;
    }
    return cells;
}

}  // namespace

std::vector<std::string> plan_cell_ids(const ExperimentPlan& plan) {
    std::vector<std::string> ids;
    switch (plan.kind) {
        case PlanKind::VocabSweep:
        case PlanKind::NoiseSweep:
            for (const SegLevel& level : plan.seg_levels) ids.push_back(level.name());
            break;
        case PlanKind::MatchedNoiseMatrix:
            for (const SegLevel& level : plan.seg_levels) {
                ids.push_back(matrix_cell_id(level, "clean"));
                for (NoiseKind k : plan.matrix_kinds) {
                    ids.push_back(matrix_cell_id(level, noise_kind_name(k)));
                }
            }
            break;
        case PlanKind::DomainReport:
            for (size_t i = 0; i < plan.tests.size(); ++i) ids.push_back(test_cell_id(i));
            break;
        case PlanKind::DepthSweep:
            for (size_t depth : plan.depths) {
                ids.push_back(depth_cell_id(depth, false));
                ids.push_back(depth_cell_id(depth, true));
            }
            break;
    }
    return ids;
}

RunManifest run_plan(const ExperimentPlan& plan, const RunOptions& opts) {
    validate_plan(plan);
    const std::string hash = plan_hash(plan);
    fs::path out(plan.out_dir);
    fs::path manifest_path = out / "manifests" / "manifest.json";

    RunManifest manifest;
    if (fs::exists(manifest_path)) {
        if (!opts.resume) {
            throw Error("output directory already holds a manifest: " + manifest_path.string() +
                        " (pass resume to continue it)");
        }
        manifest = load_manifest(manifest_path.string());
        if (manifest.plan_hash != hash) {
            throw Error("manifest " + manifest_path.string() +
                        " belongs to a different plan (hash " + manifest.plan_hash + " vs " +
                        hash + ")");
        }
        // failed cells run again
        for (auto it = manifest.cells.begin(); it != manifest.cells.end();) {
            it = it->second.done() ? std::next(it) : manifest.cells.erase(it);
        }
        manifest.complete = false;
    } else {
        if (fs::exists(out) && !fs::is_empty(out)) {
            throw Error("output directory is not empty and has no manifest: " + out.string());
        }
        manifest.plan_hash = hash;
        manifest.kind = plan_kind_name(plan.kind);
    }
    fs::create_directories(out / "manifests");
    fs::create_directories(out / "csv");
    fs::create_directories(out / "svg");
    fs::create_directories(out / "checkpoints");

    SharedData shared = prepare_shared(plan);
    std::vector<Cell> all = make_cells(plan, shared);
    std::vector<Cell*> todo;
    for (Cell& c : all) {
        if (!manifest.cells.count(c.id)) todo.push_back(&c);
    }
    save_manifest(manifest_path.string(), manifest);

    std::mutex mu;
    std::atomic<size_t> next{0};
    std::atomic<bool> halt{false};
    auto worker = [&] {
        for (;;) {
            if (halt.load()) return;
            size_t i = next.fetch_add(1);
            if (i >= todo.size()) return;
            Cell& cell = *todo[i];
            CellResult result;
            try {
                result = cell.run();
            } catch (const std::exception& e) {
                result.status = "failed";
                result.error = e.what();
            }
            std::lock_guard<std::mutex> lock(mu);
            if (opts.verbose) {
                std::fprintf(stderr, "[mtrobust] cell %s: %s%s%s\n", cell.id.c_str(),
                             result.status.c_str(), result.error.empty() ? "" : " — ",
                             result.error.c_str());
            }
            manifest.cells[cell.id] = std::move(result);
            save_manifest(manifest_path.string(), manifest);
            if (!manifest.cells[cell.id].done() && plan.halt_on_error) halt.store(true);
        }
    };

    size_t jobs = std::max<size_t>(1, std::min(opts.jobs, todo.size()));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    bool complete = true;
    for (const std::string& id : plan_cell_ids(plan)) {
        auto it = manifest.cells.find(id);
        complete = complete && it != manifest.cells.end() && it->second.done();
    }
    manifest.complete = complete;
    save_manifest(manifest_path.string(), manifest);
    if (complete) emit_report(plan, manifest);
    return manifest;
}

}  // namespace mtr
