#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "mtr/harness/plan.hpp"
#include "mtr/harness/runner.hpp"
#include "mtr/harness/toytask.hpp"
#include "mtr/lm/kn_lm.hpp"
#include "mtr/metrics/bleu.hpp"
#include "mtr/metrics/sensitivity.hpp"
#include "mtr/model/checkpoint.hpp"
#include "mtr/model/trainer.hpp"
#include "mtr/model/translate.hpp"
#include "mtr/text/noise.hpp"
#include "mtr/text/segmentation.hpp"
#include "mtr/text/vocab.hpp"
#include "mtr/util/config.hpp"
#include "mtr/util/error.hpp"
#include "mtr/util/io.hpp"
#include "mtr/util/rng.hpp"

namespace fs = std::filesystem;
using namespace mtr;

namespace {

std::string num4(double v) { return format_fixed(v, 4); }

std::vector<std::string> read_input(const std::string& path) {
    return path.empty() ? read_lines(std::cin) : read_lines(path);
}

void write_output(const std::string& path, const std::vector<std::string>& lines) {
    if (path.empty()) {
        for (const std::string& l : lines) std::cout << l << '\n';
    } else {
        write_lines(path, lines);
    }
}

// ---- noise -----------------------------------------------------------------

struct NoiseArgs {
    std::string kind_name = "delete";
    double p = -1.0;
    uint64_t seed = 0;
    std::string lexicon_path, in_path, out_path, sweep_dir;
};

int cmd_noise(const NoiseArgs& a) {
    std::optional<NoiseKind> kind = parse_noise_kind(a.kind_name);
    if (!kind) throw Error("unknown noise kind '" + a.kind_name + "'");

    std::vector<std::string> lines = read_input(a.in_path);
    NoiseSpec spec;
    spec.kind = *kind;
    spec.seed = a.seed;
    spec.alphabet = default_alphabet(lines);

    ConfusionLexicon lexicon;
    const ConfusionLexicon* lex = nullptr;
    if (!a.lexicon_path.empty()) {
        lexicon = load_confusion_lexicon(a.lexicon_path);
        lex = &lexicon;
    }

    if (!a.sweep_dir.empty()) {
        fs::create_directories(a.sweep_dir);
        for (const SweepLevel& level : build_noise_sweep(lines, spec, lex)) {
            std::string path =
                (fs::path(a.sweep_dir) / sweep_file_name(spec.kind, level.percent)).string();
            write_lines(path, level.corpus);
            std::cout << path << '\n';
        }
        return 0;
    }

    if (a.p < 0.0 || a.p > 1.0) throw Error("--p must be in [0, 1] (or use --sweep)");
    spec.p = a.p;
    write_output(a.out_path, corrupt_corpus(lines, spec, lex));
    return 0;
}

// ---- metrics ----------------------------------------------------------------

int cmd_bleu(const std::string& hyp_path, const std::string& ref_path) {
    BleuScore b = corpus_bleu(read_lines(hyp_path), read_lines(ref_path));
    std::cout << "BLEU = " << num4(b.score) << '\n';
    for (int n = 0; n < 4; ++n) {
        std::cout << 'p' << n + 1 << " = " << num4(b.precisions[static_cast<size_t>(n)])
                  << '\n';
    }
    std::cout << "BP = " << num4(b.brevity_penalty) << '\n'
              << "hyp_tokens = " << b.hyp_tokens << '\n'
              << "ref_tokens = " << b.ref_tokens << '\n';
    return 0;
}

/// Two-column CSV (p, bleu); a non-numeric first line is taken as a header.
int cmd_sensitivity(const std::string& csv_path) {
    std::vector<std::pair<double, double>> points;
    std::vector<std::string> lines = read_lines(csv_path);
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty()) continue;
        size_t comma = line.find(',');
        try {
            if (comma == std::string::npos) throw std::invalid_argument("one column");
            double p = std::stod(line.substr(0, comma));
            double bleu = std::stod(line.substr(comma + 1));
            points.emplace_back(p, bleu);
        } catch (const std::exception&) {
            if (i == 0) continue;
            throw Error("sensitivity: bad CSV line " + std::to_string(i + 1) + ": " + line);
        }
    }
    SensitivityFit fit = fit_sensitivity(points);
    std::cout << "beta = " << num4(fit.beta) << '\n'
              << "alpha = " << num4(fit.alpha) << '\n'
              << "r2 = " << num4(fit.r2) << '\n';
    return 0;
}

// ---- language model ----------------------------------------------------------

int cmd_lm_train(int order, const std::string& in_path, const std::string& out_path) {
    KnLanguageModel lm = KnLanguageModel::train(read_lines(in_path), order);
    lm.save(out_path);
    if (lm.degenerate_discounts()) {
        std::cerr << "mtrobust: warning: degenerate discounts (no singleton/doubleton "
                     "n-grams at some order)\n";
    }
    std::cout << "order = " << lm.order() << '\n'
              << "events = " << lm.event_space().size() << '\n'
              << "model = " << out_path << '\n';
    return 0;
}

int cmd_lm_ppl(const std::string& model_path, const std::string& in_path) {
    KnLanguageModel lm = KnLanguageModel::load(model_path);
    std::cout << "perplexity = " << num4(lm.perplexity(read_lines(in_path))) << '\n';
    return 0;
}

// ---- segmentation -------------------------------------------------------------

int cmd_bpe_train(const std::vector<std::string>& in_paths, size_t merges, bool joint,
                  const std::string& out_path) {
    if (in_paths.size() > 1 && !joint) {
        throw Error("multiple --in files train one joint model; pass --joint to confirm");
    }
    std::vector<std::string> corpus;
    for (const std::string& path : in_paths) {
        std::vector<std::string> lines = read_lines(path);
        corpus.insert(corpus.end(), lines.begin(), lines.end());
    }
    SegmentationModel model = bpe_train(corpus, merges);
    save_merges(model, out_path);
    if (model.truncated) {
        std::cerr << "mtrobust: warning: pairs exhausted after " << model.n_merges()
                  << " merges\n";
    }
    std::cout << "merges = " << model.n_merges() << '\n' << "model = " << out_path << '\n';
    return 0;
}

int cmd_bpe_apply(const std::string& model_path, const std::string& in_path,
                  const std::string& out_path) {
    SegmentationModel model = load_merges(model_path);
    std::vector<std::string> out;
    for (const std::string& line : read_input(in_path)) {
        std::string rendered;
        for (const Token& t : segment(model, line)) {
            if (!rendered.empty()) rendered += ' ';
            rendered += t.space ? kSpaceMarkerDisplay : t.text;
        }
        out.push_back(std::move(rendered));
    }
    write_output(out_path, out);
    return 0;
}

// ---- training and decoding ---------------------------------------------------

/// Training run described by a config file: data paths and one segmentation
/// level beside the model/training presets. Writes one checkpoint per epoch.
int cmd_train(const std::string& config_path) {
    Config cfg = Config::parse_file(config_path);
    std::string train_src = cfg.get_string("data.train_src");
    std::string train_tgt = cfg.get_string("data.train_tgt");
    std::string val_src = cfg.get_string("data.val_src");
    std::string val_tgt = cfg.get_string("data.val_tgt");
    SegLevel level = parse_seg_level(cfg.get_string("seg.level", "char"));
    ModelConfig mc = ModelConfig::from_config(cfg);
    TrainConfig tc = TrainConfig::from_config(cfg);
    std::string out_dir = cfg.get_string("out.dir");
    cfg.finish();

    std::vector<std::string> src = read_lines(train_src), tgt = read_lines(train_tgt);
    std::vector<std::string> vsrc = read_lines(val_src), vtgt = read_lines(val_tgt);
    if (src.size() != tgt.size() || vsrc.size() != vtgt.size()) {
        throw Error("parallel data sides differ in length");
    }

    TranslationAssets assets;
    if (!level.character) {
        assets.src_seg = bpe_train(src, level.merges);
        assets.tgt_seg = bpe_train(tgt, level.merges);
    }
    std::vector<TokenSeq> src_tok, tgt_tok;
    for (const std::string& l : src) src_tok.push_back(segment(assets.src_seg, l));
    for (const std::string& l : tgt) tgt_tok.push_back(segment(assets.tgt_seg, l));
    assets.src_vocab = Vocab::from_tokens(src_tok);
    assets.tgt_vocab = Vocab::from_tokens(tgt_tok);
    mc.src_vocab = assets.src_vocab.size();
    mc.tgt_vocab = assets.tgt_vocab.size();
    mc.validate();

    PairCorpus train, val;
    for (size_t i = 0; i < src.size(); ++i) {
        train.emplace_back(assets.src_vocab.ids(src_tok[i]), assets.tgt_vocab.ids(tgt_tok[i]));
    }
    for (size_t i = 0; i < vsrc.size(); ++i) {
        val.emplace_back(assets.src_vocab.ids(segment(assets.src_seg, vsrc[i])),
                         assets.tgt_vocab.ids(segment(assets.tgt_seg, vtgt[i])));
    }

    fs::create_directories(out_dir);
    Transformer model = Transformer::build(mc, Rng::derive(tc.seed, 1));
    train_model(model, train, val, tc, [&](const Transformer& m, const EpochStats& es) {
        char name[32];
        std::snprintf(name, sizeof name, "epoch%03zu.ckpt", es.epoch);
        save_checkpoint((fs::path(out_dir) / name).string(), m, assets, es.epoch, es.val_ppl);
        std::cout << "epoch " << es.epoch << " loss " << num4(es.train_loss) << " val_ppl "
                  << num4(es.val_ppl) << '\n';
    });
    std::cout << "checkpoints = " << out_dir << '\n';
    return 0;
}

int cmd_translate(const std::string& model_path, const std::string& in_path,
                  const std::string& out_path, size_t beam) {
    Checkpoint ckpt = load_checkpoint(model_path);
    Transformer model = ckpt.restore();
    TranslateOptions opts;
    opts.beam_width = beam;
    write_lines(out_path, translate_lines(model, ckpt.assets, read_lines(in_path), opts));
    return 0;
}

int cmd_avg_ckpt(const std::string& dir, size_t best, const std::string& out_path) {
    std::vector<std::string> paths;
    for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".ckpt") {
            paths.push_back(e.path().string());
        }
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw Error("no .ckpt files under " + dir);

    std::vector<Checkpoint> ckpts;
    ckpts.reserve(paths.size());
    for (const std::string& p : paths) ckpts.push_back(load_checkpoint(p));

    std::vector<Checkpoint> chosen;
    for (size_t i : best_checkpoints(ckpts, best)) {
        std::cout << "using " << paths[i] << " (epoch " << ckpts[i].epoch << ", val_ppl "
                  << num4(ckpts[i].val_ppl) << ")\n";
        chosen.push_back(ckpts[i]);
    }
    Checkpoint averaged = average_checkpoints(chosen);
    Transformer model = averaged.restore();
    save_checkpoint(out_path, model, averaged.assets, averaged.epoch, averaged.val_ppl);
    std::cout << "averaged = " << out_path << '\n';
    return 0;
}

// ---- experiments ---------------------------------------------------------------

int cmd_run(const std::string& plan_path, size_t jobs, bool resume, bool verbose) {
    ExperimentPlan plan = parse_plan_file(plan_path);
    RunOptions opts;
    opts.jobs = jobs;
    opts.resume = resume;
    opts.verbose = verbose;
    RunManifest manifest = run_plan(plan, opts);

    size_t failed = 0;
    for (const auto& [id, cell] : manifest.cells) {
        if (!cell.done()) {
            ++failed;
            std::cout << "failed " << id << ": " << cell.error << '\n';
        }
    }
    std::cout << "plan " << manifest.plan_hash << ": " << manifest.cells.size() - failed
              << " cells done, " << failed << " failed\n";
    if (!manifest.complete) return 1;
    std::cout << "reports = " << (fs::path(plan.out_dir) / "csv").string() << ' '
              << (fs::path(plan.out_dir) / "svg").string() << '\n';
    return 0;
}

struct ToyArgs {
    std::string out_dir;
    ToySpec spec;
};

int cmd_toy_data(const ToyArgs& a) {
    for (const std::string& path : write_toy_dataset(a.out_dir, a.spec)) {
        std::cout << path << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"machine-translation robustness workbench"};
    app.require_subcommand(1);

    NoiseArgs noise;
    CLI::App* c_noise = app.add_subcommand("noise", "corrupt text from stdin or --in");
    c_noise->add_option("--kind", noise.kind_name, "delete|insert|replace|switch|all|natural");
    c_noise->add_option("--p", noise.p, "corruption probability");
    c_noise->add_option("--seed", noise.seed, "random seed");
    c_noise->add_option("--lexicon", noise.lexicon_path, "confusion lexicon (natural)");
    c_noise->add_option("--in", noise.in_path, "input file (default stdin)");
    c_noise->add_option("--out", noise.out_path, "output file (default stdout)");
    c_noise->add_option("--sweep", noise.sweep_dir, "write the ten-level sweep to a directory");

    std::string hyp_path, ref_path;
    CLI::App* c_bleu = app.add_subcommand("bleu", "corpus BLEU of hypotheses vs references");
    c_bleu->add_option("--hyp", hyp_path)->required();
    c_bleu->add_option("--ref", ref_path)->required();

    std::string csv_path;
    CLI::App* c_sens = app.add_subcommand("sensitivity", "least-squares fit of (p, bleu) CSV");
    c_sens->add_option("--csv", csv_path)->required();

    int lm_order = 5;
    std::string lm_in, lm_out, lm_model;
    CLI::App* c_lmt = app.add_subcommand("lm-train", "train a Kneser-Ney n-gram model");
    c_lmt->add_option("--order", lm_order, "n-gram order (default 5)");
    c_lmt->add_option("--in", lm_in)->required();
    c_lmt->add_option("--out", lm_out)->required();
    CLI::App* c_lmp = app.add_subcommand("lm-ppl", "perplexity of text under a model");
    c_lmp->add_option("--model", lm_model)->required();
    c_lmp->add_option("--in", lm_in)->required();

    std::vector<std::string> bpe_in;
    size_t bpe_merges = 0;
    bool bpe_joint = false;
    std::string bpe_out, bpe_model, bpe_apply_in, bpe_apply_out;
    CLI::App* c_bpet = app.add_subcommand("bpe-train", "learn BPE merges");
    c_bpet->add_option("--in", bpe_in, "training corpus (repeatable)")->required();
    c_bpet->add_option("--merges", bpe_merges)->required();
    c_bpet->add_flag("--joint", bpe_joint, "one model over several corpora");
    c_bpet->add_option("--out", bpe_out)->required();
    CLI::App* c_bpea = app.add_subcommand("bpe-apply", "segment text with learned merges");
    c_bpea->add_option("--model", bpe_model)->required();
    c_bpea->add_option("--in", bpe_apply_in, "input file (default stdin)");
    c_bpea->add_option("--out", bpe_apply_out, "output file (default stdout)");

    std::string train_cfg;
    CLI::App* c_train = app.add_subcommand("train", "train from a config file");
    c_train->add_option("--config", train_cfg)->required();

    std::string tr_model, tr_in, tr_out;
    size_t tr_beam = 1;
    CLI::App* c_tr = app.add_subcommand("translate", "decode a file with a checkpoint");
    c_tr->add_option("--model", tr_model)->required();
    c_tr->add_option("--in", tr_in)->required();
    c_tr->add_option("--out", tr_out)->required();
    c_tr->add_option("--beam", tr_beam, "beam width (default 1 = greedy)");

    std::string avg_dir, avg_out, avg_by = "val-ppl";
    size_t avg_best = 3;
    CLI::App* c_avg = app.add_subcommand("avg-ckpt", "average the best checkpoints");
    c_avg->add_option("dir", avg_dir, "directory of .ckpt files")->required();
    c_avg->add_option("--best", avg_best, "how many to average (default 3)");
    c_avg->add_option("--by", avg_by)->check(CLI::IsMember({"val-ppl"}));
    c_avg->add_option("--out", avg_out)->required();

    std::string plan_path;
    size_t run_jobs = 1;
    bool run_resume = false, run_verbose = false;
    CLI::App* c_run = app.add_subcommand("run", "execute an experiment plan");
    c_run->add_option("--plan", plan_path)->required();
    c_run->add_option("--jobs", run_jobs, "concurrent cells (default 1)");
    c_run->add_flag("--resume", run_resume, "continue an interrupted run");
    c_run->add_flag("--verbose", run_verbose, "per-cell progress on stderr");

    ToyArgs toy;
    CLI::App* c_toy = app.add_subcommand("toy-data", "write the bundled cipher toy task");
    c_toy->add_option("--out", toy.out_dir)->required();
    c_toy->add_option("--lexicon", toy.spec.lexicon, "distinct words (default 120)");
    c_toy->add_option("--train", toy.spec.train_sentences, "training sentences (default 1500)");
    c_toy->add_option("--val", toy.spec.val_sentences, "validation sentences (default 120)");
    c_toy->add_option("--test", toy.spec.test_sentences, "test sentences (default 120)");
    c_toy->add_option("--min-words", toy.spec.min_words);
    c_toy->add_option("--max-words", toy.spec.max_words);
    c_toy->add_option("--seed", toy.spec.seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_noise->parsed()) return cmd_noise(noise);
        if (c_bleu->parsed()) return cmd_bleu(hyp_path, ref_path);
        if (c_sens->parsed()) return cmd_sensitivity(csv_path);
        if (c_lmt->parsed()) return cmd_lm_train(lm_order, lm_in, lm_out);
        if (c_lmp->parsed()) return cmd_lm_ppl(lm_model, lm_in);
        if (c_bpet->parsed()) return cmd_bpe_train(bpe_in, bpe_merges, bpe_joint, bpe_out);
        if (c_bpea->parsed()) return cmd_bpe_apply(bpe_model, bpe_apply_in, bpe_apply_out);
        if (c_train->parsed()) return cmd_train(train_cfg);
        if (c_tr->parsed()) return cmd_translate(tr_model, tr_in, tr_out, tr_beam);
        if (c_avg->parsed()) return cmd_avg_ckpt(avg_dir, avg_best, avg_out);
        if (c_run->parsed()) return cmd_run(plan_path, run_jobs, run_resume, run_verbose);
        if (c_toy->parsed()) return cmd_toy_data(toy);
    } catch (const std::exception& e) {
        std::cerr << "mtrobust: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
