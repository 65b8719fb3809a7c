#include "mtr/harness/plan.hpp"

#include <filesystem>
#include <sstream>

#include "mtr/util/config.hpp"
#include "mtr/util/error.hpp"

namespace mtr {

namespace {

constexpr const char* kKindNames[] = {"vocab-sweep", "noise-sweep", "matched-noise",
                                      "domain-report", "depth-sweep"};

void require_file(const std::string& what, const std::string& path) {
    if (path.empty()) throw Error("plan: missing required path " + what);
    if (!std::filesystem::exists(path)) {
        throw Error("plan: " + what + " does not exist: " + path);
    }
}

}  // namespace

uint64_t stable_hash64(const std::string& text) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

const char* plan_kind_name(PlanKind kind) { return kKindNames[static_cast<int>(kind)]; }

std::optional<PlanKind> parse_plan_kind(const std::string& name) {
    for (int i = 0; i < 5; ++i) {
        if (name == kKindNames[i]) return static_cast<PlanKind>(i);
    }
    return std::nullopt;
}

std::string SegLevel::name() const {
    return character ? "char" : "bpe" + std::to_string(merges);
}

SegLevel parse_seg_level(const std::string& text) {
    if (text == "char") return SegLevel{true, 0};
    if (text.rfind("bpe:", 0) == 0) {
        std::string n = text.substr(4);
        size_t pos = 0;
        unsigned long long merges = 0;
        try {
            merges = std::stoull(n, &pos);
        } catch (const std::exception&) {
            throw Error("plan: bad segmentation level '" + text + "'");
        }
        if (pos != n.size() || merges == 0) {
            throw Error("plan: bad segmentation level '" + text + "'");
        }
        return SegLevel{false, static_cast<size_t>(merges)};
    }
    throw Error("plan: bad segmentation level '" + text + "' (want char or bpe:<merges>)");
}

namespace {

ExperimentPlan plan_from_config(Config& cfg) {
    ExperimentPlan p;

    std::string kind = cfg.get_string("kind");
    std::optional<PlanKind> k = parse_plan_kind(kind);
    if (!k) throw Error("plan: unknown kind '" + kind + "'");
    p.kind = *k;

    p.train_src = cfg.get_string("data.train_src", "");
    p.train_tgt = cfg.get_string("data.train_tgt", "");
    p.val_src = cfg.get_string("data.val_src", "");
    p.val_tgt = cfg.get_string("data.val_tgt", "");
    p.test_src = cfg.get_string("data.test_src", "");
    p.test_tgt = cfg.get_string("data.test_tgt", "");
    if (cfg.has("data.tests")) p.tests = cfg.get_list("data.tests");

    if (cfg.has("seg.levels")) {
        for (const std::string& s : cfg.get_list("seg.levels")) {
            p.seg_levels.push_back(parse_seg_level(s));
        }
    }

    if (cfg.has("noise.kind")) {
        std::string nk = cfg.get_string("noise.kind");
        std::optional<NoiseKind> parsed = parse_noise_kind(nk);
        if (!parsed) throw Error("plan: unknown noise kind '" + nk + "'");
        p.noise_kind = *parsed;
    }
    if (cfg.has("noise.levels")) {
        for (int64_t v : cfg.get_int_list("noise.levels")) {
            if (v < 0 || v > 10) throw Error("plan: noise level out of range: " + std::to_string(v));
            p.noise_levels.push_back(static_cast<int>(v));
        }
    } else {
        for (int v = 1; v <= 10; ++v) p.noise_levels.push_back(v);
    }
    if (cfg.has("noise.kinds")) {
        for (const std::string& nk : cfg.get_list("noise.kinds")) {
            std::optional<NoiseKind> parsed = parse_noise_kind(nk);
            if (!parsed) throw Error("plan: unknown noise kind '" + nk + "'");
            p.matrix_kinds.push_back(*parsed);
        }
    } else {
        p.matrix_kinds = {NoiseKind::Delete, NoiseKind::Insert, NoiseKind::Replace,
                          NoiseKind::Switch};
    }
    p.train_noise_p = cfg.get_double("noise.train_p", 0.05);
    p.noise_lexicon = cfg.get_string("noise.lexicon", "");

    p.lm_order = static_cast<int>(cfg.get_int("lm.order", 5));
    if (cfg.has("depth.list")) {
        for (int64_t d : cfg.get_int_list("depth.list")) {
            if (d < 1) throw Error("plan: depth must be positive");
            p.depths.push_back(static_cast<size_t>(d));
        }
    }

    p.model = ModelConfig::from_config(cfg);
    p.train = TrainConfig::from_config(cfg);
    if (cfg.has("grid.dropout")) p.grid_dropout = cfg.get_double_list("grid.dropout");
    if (cfg.has("grid.lr")) p.grid_lr = cfg.get_double_list("grid.lr");
    p.beam_width = static_cast<size_t>(cfg.get_int("translate.beam", 1));

    p.out_dir = cfg.get_string("out.dir");
    p.seed = cfg.get_u64("seed", 1);
    p.halt_on_error = cfg.get_bool("halt_on_error", true);

    cfg.finish();
    return p;
}

}  // namespace

ExperimentPlan parse_plan_text(const std::string& text, const std::string& origin) {
    Config cfg = Config::parse_string(text, origin);
    return plan_from_config(cfg);
}

ExperimentPlan parse_plan_file(const std::string& path) {
    Config cfg = Config::parse_file(path);
    return plan_from_config(cfg);
}

void validate_plan(const ExperimentPlan& plan) {
    if (plan.out_dir.empty()) throw Error("plan: out.dir is required");
    if (plan.train_noise_p < 0.0 || plan.train_noise_p > 1.0) {
        throw Error("plan: noise.train_p must be within [0, 1]");
    }
    if (plan.beam_width < 1) throw Error("plan: translate.beam must be at least 1");

    bool trains = plan.kind == PlanKind::VocabSweep || plan.kind == PlanKind::NoiseSweep ||
                  plan.kind == PlanKind::MatchedNoiseMatrix || plan.kind == PlanKind::DepthSweep;
    if (trains) {
        require_file("data.train_src", plan.train_src);
        require_file("data.train_tgt", plan.train_tgt);
        require_file("data.val_src", plan.val_src);
        require_file("data.val_tgt", plan.val_tgt);
        require_file("data.test_src", plan.test_src);
        require_file("data.test_tgt", plan.test_tgt);
        if (plan.seg_levels.empty()) throw Error("plan: seg.levels is required");
    }
    if (plan.kind == PlanKind::NoiseSweep) {
        if (plan.noise_levels.empty()) throw Error("plan: noise.levels is empty");
        for (size_t i = 1; i < plan.noise_levels.size(); ++i) {
            if (plan.noise_levels[i] <= plan.noise_levels[i - 1]) {
                throw Error("plan: noise.levels must be strictly increasing");
            }
        }
    }
    if (plan.kind == PlanKind::MatchedNoiseMatrix && plan.matrix_kinds.empty()) {
        throw Error("plan: noise.kinds is empty");
    }
    bool natural = plan.kind == PlanKind::NoiseSweep && plan.noise_kind == NoiseKind::Natural;
    if (plan.kind == PlanKind::MatchedNoiseMatrix) {
        for (NoiseKind k : plan.matrix_kinds) natural = natural || k == NoiseKind::Natural;
    }
    if (natural) require_file("noise.lexicon", plan.noise_lexicon);
    if (plan.kind == PlanKind::DomainReport) {
        require_file("data.train_src", plan.train_src);
        if (plan.tests.empty()) throw Error("plan: data.tests is required for domain-report");
        for (const std::string& t : plan.tests) require_file("data.tests entry", t);
        if (plan.lm_order < 1) throw Error("plan: lm.order must be at least 1");
    }
    if (plan.kind == PlanKind::DepthSweep && plan.depths.empty()) {
        throw Error("plan: depth.list is required for depth-sweep");
    }
    if (trains) {
        ModelConfig probe = plan.model;
        probe.src_vocab = probe.tgt_vocab = 8;  // placeholder until segmentation runs
        probe.validate();
        plan.train.validate();
    }
}

std::string plan_hash(const ExperimentPlan& plan) {
    std::ostringstream s;
    s << "kind=" << plan_kind_name(plan.kind) << '\n'
      << "train=" << plan.train_src << '|' << plan.train_tgt << '\n'
      << "val=" << plan.val_src << '|' << plan.val_tgt << '\n'
      << "test=" << plan.test_src << '|' << plan.test_tgt << '\n';
    s << "tests=";
    for (const std::string& t : plan.tests) s << t << '|';
    s << '\n';
    s << "seg=";
    for (const SegLevel& l : plan.seg_levels) s << l.name() << '|';
    s << '\n';
    s << "noise=" << noise_kind_name(plan.noise_kind) << '\n';
    s << "levels=";
    for (int v : plan.noise_levels) s << v << '|';
    s << '\n';
    s << "kinds=";
    for (NoiseKind k : plan.matrix_kinds) s << noise_kind_name(k) << '|';
    s << '\n';
    s << "train_p=" << plan.train_noise_p << '\n'
      << "lexicon=" << plan.noise_lexicon << '\n'
      << "lm_order=" << plan.lm_order << '\n';
    s << "depths=";
    for (size_t d : plan.depths) s << d << '|';
    s << '\n';
    s << plan.model.to_text();
    s << "lr=" << plan.train.lr << "\nwarmup=" << plan.train.warmup_steps
      << "\nepochs=" << plan.train.epochs << "\nbatch_tokens=" << plan.train.batch_tokens
      << "\nsmoothing=" << plan.train.label_smoothing << "\ntrain_seed=" << plan.train.seed
      << '\n';
    s << "grid_dropout=";
    for (double d : plan.grid_dropout) s << d << '|';
    s << '\n';
    s << "grid_lr=";
    for (double d : plan.grid_lr) s << d << '|';
    s << '\n';
    s << "beam=" << plan.beam_width << "\nseed=" << plan.seed << '\n';

    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(stable_hash64(s.str())));
    return buf;
}

}  // namespace mtr
