#include "mtr/model/config.hpp"

#include <sstream>

#include "mtr/util/error.hpp"

namespace mtr {

std::string norm_placement_name(NormPlacement p) {
    return p == NormPlacement::Pre ? "pre" : "post";
}

NormPlacement parse_norm_placement(const std::string& s) {
    if (s == "pre") return NormPlacement::Pre;
    if (s == "post") return NormPlacement::Post;
    throw Error("unknown norm placement '" + s + "' (expected pre or post)");
}

void ModelConfig::validate() const {
    if (d_model == 0 || d_ffn == 0 || heads == 0) {
        throw Error("model dimensions must be positive");
    }
    if (d_model % heads != 0) {
        throw Error("heads (" + std::to_string(heads) + ") must divide d_model (" +
                    std::to_string(d_model) + ")");
    }
    if (enc_layers < 1 || dec_layers < 1) throw Error("need at least one layer per stack");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("dropout must be in [0, 1)");
    if (src_vocab == 0 || tgt_vocab == 0) throw Error("vocab sizes must be positive");
    if (share_embeddings && src_vocab != tgt_vocab) {
        throw Error("shared embeddings require equal source/target vocabularies");
    }
    if (max_positions == 0) throw Error("max_positions must be positive");
}

ModelConfig ModelConfig::from_config(Config& cfg) {
    ModelConfig m;
    m.d_model = static_cast<size_t>(cfg.get_int("model.d_model", 512));
    m.d_ffn = static_cast<size_t>(cfg.get_int("model.d_ffn", 1024));
    m.heads = static_cast<size_t>(cfg.get_int("model.heads", 4));
    m.enc_layers = static_cast<size_t>(cfg.get_int("model.enc_layers", 6));
    m.dec_layers = static_cast<size_t>(cfg.get_int("model.dec_layers", 6));
    m.dropout = cfg.get_double("model.dropout", 0.1);
    m.norm_placement = parse_norm_placement(cfg.get_string("model.norm_placement", "post"));
    m.transparent_attention = cfg.get_bool("model.transparent_attention", false);
    m.share_embeddings = cfg.get_bool("model.share_embeddings", false);
    m.max_positions = static_cast<size_t>(cfg.get_int("model.max_positions", 512));
    return m;
}

std::string ModelConfig::to_text() const {
    std::ostringstream os;
    os << "d_model = " << d_model << "\n";
    os << "d_ffn = " << d_ffn << "\n";
    os << "heads = " << heads << "\n";
    os << "enc_layers = " << enc_layers << "\n";
    os << "dec_layers = " << dec_layers << "\n";
    os << "dropout = " << dropout << "\n";
    os << "norm_placement = " << norm_placement_name(norm_placement) << "\n";
    os << "transparent_attention = " << (transparent_attention ? "true" : "false") << "\n";
    os << "share_embeddings = " << (share_embeddings ? "true" : "false") << "\n";
    os << "src_vocab = " << src_vocab << "\n";
    os << "tgt_vocab = " << tgt_vocab << "\n";
    os << "max_positions = " << max_positions << "\n";
    return os.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
    Config cfg = Config::parse_string(text, "<model header>");
    ModelConfig m;
    m.d_model = static_cast<size_t>(cfg.get_int("d_model"));
    m.d_ffn = static_cast<size_t>(cfg.get_int("d_ffn"));
    m.heads = static_cast<size_t>(cfg.get_int("heads"));
    m.enc_layers = static_cast<size_t>(cfg.get_int("enc_layers"));
    m.dec_layers = static_cast<size_t>(cfg.get_int("dec_layers"));
    m.dropout = cfg.get_double("dropout");
    m.norm_placement = parse_norm_placement(cfg.get_string("norm_placement"));
    m.transparent_attention = cfg.get_bool("transparent_attention", false);
    m.share_embeddings = cfg.get_bool("share_embeddings", false);
    m.src_vocab = static_cast<size_t>(cfg.get_int("src_vocab"));
    m.tgt_vocab = static_cast<size_t>(cfg.get_int("tgt_vocab"));
    m.max_positions = static_cast<size_t>(cfg.get_int("max_positions"));
    cfg.finish();
    m.validate();
    return m;
}

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw Error("lr must be positive");
    if (warmup_steps == 0) throw Error("warmup_steps must be positive");
    if (epochs == 0) throw Error("epochs must be positive");
    if (batch_tokens == 0) throw Error("batch_tokens must be positive");
    if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
        throw Error("label_smoothing must be in [0, 1)");
    }
}

TrainConfig TrainConfig::from_config(Config& cfg) {
    TrainConfig t;
    t.lr = cfg.get_double("train.lr", 1e-3);
    t.warmup_steps = static_cast<size_t>(cfg.get_int("train.warmup_steps", 400));
    t.epochs = static_cast<size_t>(cfg.get_int("train.epochs", 10));
    t.batch_tokens = static_cast<size_t>(cfg.get_int("train.batch_tokens", 1024));
    t.label_smoothing = cfg.get_double("train.label_smoothing", 0.1);
    t.seed = cfg.get_u64("train.seed", 1);
    return t;
}

}  // namespace mtr
