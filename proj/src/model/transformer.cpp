#include "mtr/model/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtr/kernels/kernels.hpp"
#include "mtr/text/vocab.hpp"
#include "mtr/util/error.hpp"

namespace mtr {

namespace {

using Params = std::map<std::string, Tensor>;

const Tensor& P(const Params& params, const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) throw Error("unknown parameter '" + name + "'");
    return it->second;
}

Tensor& PM(Params& params, const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) throw Error("unknown parameter '" + name + "'");
    return it->second;
}

constexpr double kLnEps = 1e-6;

// ---- small building blocks -------------------------------------------------

void add_bias(size_t T, size_t dim, const Tensor& b, double* y) {
    for (size_t t = 0; t < T; ++t) kern::active().add(dim, b.v.data(), y + t * dim);
}

void colsum_accum(size_t T, size_t dim, const double* dy, double* bg) {
    for (size_t t = 0; t < T; ++t) kern::active().add(dim, dy + t * dim, bg);
}

/// y[T,dout] = x[T,din] · W[din,dout] + b
void linear_fwd(const Tensor& W, const Tensor& b, const double* x, size_t T,
                std::vector<double>& y) {
    size_t din = W.dims[0], dout = W.dims[1];
    y.assign(T * dout, 0.0);
    kern::active().gemm_nn(T, din, dout, x, W.v.data(), y.data(), false);
    add_bias(T, dout, b, y.data());
}

/// dW += x^T·dy, db += colsum(dy), dx += dy·W^T (dx may be null)
void linear_bwd(Tensor& W, Tensor& b, const double* x, const double* dy, size_t T,
                double* dx) {
    size_t din = W.dims[0], dout = W.dims[1];
    kern::active().gemm_tn(din, T, dout, x, dy, W.g.data(), true);
    colsum_accum(T, dout, dy, b.g.data());
    if (dx) kern::active().gemm_nt(T, dout, din, dy, W.v.data(), dx, true);
}

struct LnTape {
    std::vector<double> in, out, mean, rstd;
    size_t T = 0;
};

void ln_fwd(const Tensor& g, const Tensor& b, std::vector<double> in, size_t T, size_t d,
            LnTape& t) {
    t.T = T;
    t.in = std::move(in);
    t.out.assign(T * d, 0.0);
    t.mean.assign(T, 0.0);
    t.rstd.assign(T, 0.0);
    kern::active().layernorm_forward(T, d, kLnEps, t.in.data(), g.v.data(), b.v.data(),
                                     t.out.data(), t.mean.data(), t.rstd.data());
}

/// din += dL/d(in); gain/bias grads accumulated.
void ln_bwd(Tensor& g, Tensor& b, const LnTape& t, size_t d, const double* dout,
            double* din) {
    kern::active().layernorm_backward(t.T, d, t.in.data(), g.v.data(), t.mean.data(),
                                      t.rstd.data(), dout, din, g.g.data(), b.g.data());
}

struct DropTape {
    std::vector<double> mask;  // empty = identity
};

void drop_fwd(Rng* rng, double p, std::vector<double>& x, DropTape& t) {
    if (!rng || p <= 0.0) {
        t.mask.clear();
        return;
    }
    double keep = 1.0 / (1.0 - p);
    t.mask.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        t.mask[i] = rng->unit() < p ? 0.0 : keep;
        x[i] *= t.mask[i];
    }
}

void drop_bwd(const DropTape& t, std::vector<double>& dx) {
    if (t.mask.empty()) return;
    for (size_t i = 0; i < dx.size(); ++i) dx[i] *= t.mask[i];
}

// ---- attention --------------------------------------------------------------

struct AttnParamRefs {
    const Tensor *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
};

AttnParamRefs attn_refs(const Params& p, const std::string& prefix) {
    return {&P(p, prefix + ".wq"), &P(p, prefix + ".bq"), &P(p, prefix + ".wk"),
            &P(p, prefix + ".bk"), &P(p, prefix + ".wv"), &P(p, prefix + ".bv"),
            &P(p, prefix + ".wo"), &P(p, prefix + ".bo")};
}

struct AttnTape {
    std::vector<double> qin, kin;  // projection inputs
    std::vector<double> q, k, v;   // projections, [T, d]
    std::vector<double> probs;     // [H, Tq, Tk] post-softmax
    std::vector<double> ctx;       // [Tq, d] merged heads
    size_t Tq = 0, Tk = 0;
};

void gather_head(const std::vector<double>& merged, size_t T, size_t d, size_t h, size_t dk,
                 std::vector<double>& out) {
    out.resize(T * dk);
    for (size_t t = 0; t < T; ++t) {
        const double* src = merged.data() + t * d + h * dk;
        std::copy(src, src + dk, out.data() + t * dk);
    }
}

void scatter_head_accum(const std::vector<double>& part, size_t T, size_t d, size_t h,
                        size_t dk, std::vector<double>& merged) {
    for (size_t t = 0; t < T; ++t) {
        double* dst = merged.data() + t * d + h * dk;
        const double* src = part.data() + t * dk;
        for (size_t c = 0; c < dk; ++c) dst[c] += src[c];
    }
}

void attn_fwd(const ModelConfig& cfg, const AttnParamRefs& w, std::vector<double> qin,
              std::vector<double> kin, size_t Tq, size_t Tk, bool causal, AttnTape& t,
              std::vector<double>& out) {
    size_t d = cfg.d_model, H = cfg.heads, dk = cfg.head_dim();
    double inv_scale = 1.0 / std::sqrt(static_cast<double>(dk));
    t.Tq = Tq;
    t.Tk = Tk;
    t.qin = std::move(qin);
    t.kin = std::move(kin);
    linear_fwd(*w.wq, *w.bq, t.qin.data(), Tq, t.q);
    linear_fwd(*w.wk, *w.bk, t.kin.data(), Tk, t.k);
    linear_fwd(*w.wv, *w.bv, t.kin.data(), Tk, t.v);
    t.probs.assign(H * Tq * Tk, 0.0);
    t.ctx.assign(Tq * d, 0.0);
    std::vector<double> qh, kh, vh, ch(Tq * dk);
    for (size_t h = 0; h < H; ++h) {
        gather_head(t.q, Tq, d, h, dk, qh);
        gather_head(t.k, Tk, d, h, dk, kh);
        gather_head(t.v, Tk, d, h, dk, vh);
        double* scores = t.probs.data() + h * Tq * Tk;
        kern::active().gemm_nt(Tq, dk, Tk, qh.data(), kh.data(), scores, false);
        kern::active().scale(Tq * Tk, inv_scale, scores);
        if (causal) {
            for (size_t i = 0; i < Tq; ++i) {
                for (size_t j = i + 1; j < Tk; ++j) {
                    scores[i * Tk + j] = -std::numeric_limits<double>::infinity();
                }
            }
        }
        kern::active().softmax_rows(Tq, Tk, scores);
        std::fill(ch.begin(), ch.end(), 0.0);
        kern::active().gemm_nn(Tq, Tk, dk, scores, vh.data(), ch.data(), false);
        scatter_head_accum(ch, Tq, d, h, dk, t.ctx);
    }
    linear_fwd(*w.wo, *w.bo, t.ctx.data(), Tq, out);
}

struct AttnParamMuts {
    Tensor *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
};

AttnParamMuts attn_muts(Params& p, const std::string& prefix) {
    return {&PM(p, prefix + ".wq"), &PM(p, prefix + ".bq"), &PM(p, prefix + ".wk"),
            &PM(p, prefix + ".bk"), &PM(p, prefix + ".wv"), &PM(p, prefix + ".bv"),
            &PM(p, prefix + ".wo"), &PM(p, prefix + ".bo")};
}

/// dqin accumulated into dqin; key/value-side input gradient into dkin.
void attn_bwd(const ModelConfig& cfg, const AttnParamMuts& w, const AttnTape& t,
              const std::vector<double>& dout, std::vector<double>& dqin,
              std::vector<double>& dkin) {
    size_t d = cfg.d_model, H = cfg.heads, dk = cfg.head_dim();
    size_t Tq = t.Tq, Tk = t.Tk;
    double inv_scale = 1.0 / std::sqrt(static_cast<double>(dk));

    std::vector<double> dctx(Tq * d, 0.0);
    linear_bwd(*w.wo, *w.bo, t.ctx.data(), dout.data(), Tq, dctx.data());

    std::vector<double> dq(Tq * d, 0.0), dk_(Tk * d, 0.0), dv(Tk * d, 0.0);
    std::vector<double> qh, kh, vh, dch(Tq * dk), ds(Tq * Tk), dsr(Tq * Tk);
    std::vector<double> dqh(Tq * dk), dkh(Tk * dk), dvh(Tk * dk);
    for (size_t h = 0; h < H; ++h) {
        gather_head(t.q, Tq, d, h, dk, qh);
        gather_head(t.k, Tk, d, h, dk, kh);
        gather_head(t.v, Tk, d, h, dk, vh);
        gather_head(dctx, Tq, d, h, dk, dch);
        const double* probs = t.probs.data() + h * Tq * Tk;
        // dS = dC·V^T ; dV = S^T·dC
        std::fill(ds.begin(), ds.end(), 0.0);
        kern::active().gemm_nt(Tq, dk, Tk, dch.data(), vh.data(), ds.data(), false);
        std::fill(dvh.begin(), dvh.end(), 0.0);
        kern::active().gemm_tn(Tk, Tq, dk, probs, dch.data(), dvh.data(), false);
        // softmax backward, then undo the 1/sqrt(dk) scaling
        for (size_t i = 0; i < Tq; ++i) {
            const double* p = probs + i * Tk;
            const double* dsi = ds.data() + i * Tk;
            double inner = kern::active().dot(Tk, dsi, p);
            double* out = dsr.data() + i * Tk;
            for (size_t j = 0; j < Tk; ++j) out[j] = p[j] * (dsi[j] - inner) * inv_scale;
        }
        std::fill(dqh.begin(), dqh.end(), 0.0);
        kern::active().gemm_nn(Tq, Tk, dk, dsr.data(), kh.data(), dqh.data(), false);
        std::fill(dkh.begin(), dkh.end(), 0.0);
        kern::active().gemm_tn(Tk, Tq, dk, dsr.data(), qh.data(), dkh.data(), false);
        scatter_head_accum(dqh, Tq, d, h, dk, dq);
        scatter_head_accum(dkh, Tk, d, h, dk, dk_);
        scatter_head_accum(dvh, Tk, d, h, dk, dv);
    }
    linear_bwd(*w.wq, *w.bq, t.qin.data(), dq.data(), Tq, dqin.data());
    linear_bwd(*w.wk, *w.bk, t.kin.data(), dk_.data(), Tk, dkin.data());
    linear_bwd(*w.wv, *w.bv, t.kin.data(), dv.data(), Tk, dkin.data());
}

// ---- feed-forward -----------------------------------------------------------

struct FfnTape {
    std::vector<double> in, h;  // h pre-activation, [T, F]
    size_t T = 0;
};

void ffn_fwd(const Params& p, const std::string& prefix, std::vector<double> in, size_t T,
             FfnTape& t, std::vector<double>& out) {
    t.T = T;
    t.in = std::move(in);
    linear_fwd(P(p, prefix + ".w1"), P(p, prefix + ".b1"), t.in.data(), T, t.h);
    std::vector<double> hr(t.h.size());
    kern::active().relu(t.h.size(), t.h.data(), hr.data());
    linear_fwd(P(p, prefix + ".w2"), P(p, prefix + ".b2"), hr.data(), T, out);
}

void ffn_bwd(Params& p, const std::string& prefix, const FfnTape& t,
             const std::vector<double>& dout, std::vector<double>& din) {
    size_t T = t.T;
    std::vector<double> hr(t.h.size());
    kern::active().relu(t.h.size(), t.h.data(), hr.data());
    size_t F = PM(p, prefix + ".w1").dims[1];
    std::vector<double> dhr(T * F, 0.0);
    linear_bwd(PM(p, prefix + ".w2"), PM(p, prefix + ".b2"), hr.data(), dout.data(), T,
               dhr.data());
    std::vector<double> dh(T * F, 0.0);
    kern::active().relu_backward(t.h.size(), t.h.data(), dhr.data(), dh.data());
    linear_bwd(PM(p, prefix + ".w1"), PM(p, prefix + ".b1"), t.in.data(), dh.data(), T,
               din.data());
}

// ---- residual sublayer plumbing ----------------------------------------------

struct SubTape {
    LnTape ln;
    DropTape drop;
};

// ---- embeddings ---------------------------------------------------------------

struct EmbTape {
    std::vector<int32_t> rows;
    DropTape drop;
    std::vector<double> out;  // post-dropout, [T, d]
};

void positional_row(size_t t, size_t d, double* row) {
    for (size_t i = 0; i < d; i += 2) {
        double angle = static_cast<double>(t) *
                       std::exp(-std::log(10000.0) * static_cast<double>(i) /
                                static_cast<double>(d));
        row[i] += std::sin(angle);
        if (i + 1 < d) row[i + 1] += std::cos(angle);
    }
}

void embed_fwd(const ModelConfig& cfg, const Tensor& table, const std::vector<int32_t>& ids,
               Rng* rng, EmbTape& t) {
    size_t d = cfg.d_model;
    double scale = std::sqrt(static_cast<double>(d));
    if (ids.size() > cfg.max_positions) {
        throw Error("sequence of " + std::to_string(ids.size()) +
                    " positions exceeds max_positions " + std::to_string(cfg.max_positions));
    }
    t.rows.assign(ids.begin(), ids.end());
    t.out.assign(ids.size() * d, 0.0);
    for (size_t pos = 0; pos < ids.size(); ++pos) {
        int32_t id = ids[pos];
        if (id < 0 || static_cast<size_t>(id) >= table.dims[0]) {
            throw Error("token id " + std::to_string(id) + " out of range");
        }
        double* row = t.out.data() + pos * d;
        const double* src = table.v.data() + static_cast<size_t>(id) * d;
        for (size_t c = 0; c < d; ++c) row[c] = src[c] * scale;
        positional_row(pos, d, row);
    }
    drop_fwd(rng, cfg.dropout, t.out, t.drop);
}

void embed_bwd(const ModelConfig& cfg, Tensor& table, const EmbTape& t,
               std::vector<double> dout) {
    size_t d = cfg.d_model;
    double scale = std::sqrt(static_cast<double>(d));
    drop_bwd(t.drop, dout);
    for (size_t pos = 0; pos < t.rows.size(); ++pos) {
        double* dst = table.g.data() + static_cast<size_t>(t.rows[pos]) * d;
        kern::active().axpy(d, scale, dout.data() + pos * d, dst);
    }
}

// ---- encoder / decoder tapes ---------------------------------------------------

struct EncLayerTape {
    SubTape attn_s, ffn_s;
    AttnTape attn;
    FfnTape ffn;
};

struct DecLayerTape {
    SubTape self_s, cross_s, ffn_s;
    AttnTape self, cross;
    FfnTape ffn;
};

struct EncTape {
    EmbTape emb;
    std::vector<EncLayerTape> layers;
    std::vector<std::vector<double>> outs;  // [0]=embedding output, [i]=after layer i
    LnTape single_ln;                       // pre-norm, non-transparent final LN
    std::vector<LnTape> mem_ln;             // pre-norm, transparent: one per decoder layer
    std::vector<double> sweights;           // transparent: [dec_layers, enc_layers+1]
    std::vector<std::vector<double>> mem;   // one memory per decoder layer (or single [0])
    size_t S = 0;
};

struct DecTape {
    EmbTape emb;
    std::vector<DecLayerTape> layers;
    LnTape final_ln;          // pre-norm only
    std::vector<double> top;  // [T, d]
    size_t T = 0;
};

std::string emb_name(const ModelConfig& cfg, bool target) {
    if (cfg.share_embeddings) return "embed.shared";
    return target ? "embed.tgt" : "embed.src";
}

/// One residual sublayer: updates x in place, fills tape. `sub` maps the
/// sublayer input to its raw output.
template <typename Sub>
void sublayer_fwd(const ModelConfig& cfg, const Params& p, const std::string& ln_prefix,
                  std::vector<double>& x, size_t T, SubTape& t, Rng* rng, Sub sub) {
    size_t d = cfg.d_model;
    const Tensor& g = P(p, ln_prefix + ".g");
    const Tensor& b = P(p, ln_prefix + ".b");
    if (cfg.norm_placement == NormPlacement::Pre) {
        ln_fwd(g, b, x, T, d, t.ln);  // copies x as ln input
        std::vector<double> s = sub(t.ln.out);
        drop_fwd(rng, cfg.dropout, s, t.drop);
        kern::active().add(T * d, s.data(), x.data());
    } else {
        std::vector<double> s = sub(x);
        drop_fwd(rng, cfg.dropout, s, t.drop);
        kern::active().add(T * d, x.data(), s.data());  // s = x + dropped
        ln_fwd(g, b, std::move(s), T, d, t.ln);
        x = t.ln.out;
    }
}

/// Mirror of sublayer_fwd. dx is the gradient at the block output and is
/// rewritten to the gradient at the block input. `subb` maps the gradient at
/// the sublayer raw output to the gradient at the sublayer input.
template <typename SubB>
void sublayer_bwd(const ModelConfig& cfg, Params& p, const std::string& ln_prefix,
                  const SubTape& t, std::vector<double>& dx, size_t T, SubB subb) {
    size_t d = cfg.d_model;
    Tensor& g = PM(p, ln_prefix + ".g");
    Tensor& b = PM(p, ln_prefix + ".b");
    if (cfg.norm_placement == NormPlacement::Pre) {
        std::vector<double> ds = dx;  // through the residual add
        drop_bwd(t.drop, ds);
        std::vector<double> dln_out = subb(ds);
        ln_bwd(g, b, t.ln, d, dln_out.data(), dx.data());
    } else {
        std::vector<double> dr(T * d, 0.0);
        ln_bwd(g, b, t.ln, d, dx.data(), dr.data());
        std::vector<double> ds = dr;
        drop_bwd(t.drop, ds);
        std::vector<double> dsub_in = subb(ds);
        kern::active().add(T * d, dsub_in.data(), dr.data());
        dx = std::move(dr);
    }
}

// ---- encoder forward/backward ---------------------------------------------------

void encoder_fwd(const ModelConfig& cfg, const Params& p, const std::vector<int32_t>& src,
                 Rng* rng, EncTape& t) {
    size_t d = cfg.d_model, L = cfg.enc_layers;
    embed_fwd(cfg, P(p, emb_name(cfg, false)), src, rng, t.emb);
    t.S = src.size();
    t.outs.clear();
    t.outs.push_back(t.emb.out);
    t.layers.assign(L, {});
    std::vector<double> x = t.emb.out;
    for (size_t i = 0; i < L; ++i) {
        std::string base = "enc." + std::to_string(i);
        EncLayerTape& lt = t.layers[i];
        sublayer_fwd(cfg, p, base + ".ln1", x, t.S, lt.attn_s, rng,
                     [&](const std::vector<double>& in) {
                         std::vector<double> out;
                         attn_fwd(cfg, attn_refs(p, base + ".attn"), in, in, t.S, t.S,
                                  false, lt.attn, out);
                         return out;
                     });
        sublayer_fwd(cfg, p, base + ".ln2", x, t.S, lt.ffn_s, rng,
                     [&](const std::vector<double>& in) {
                         std::vector<double> out;
                         ffn_fwd(p, base + ".ffn", in, t.S, lt.ffn, out);
                         return out;
                     });
        t.outs.push_back(x);
    }

    // memories the decoder cross-attends to
    bool pre = cfg.norm_placement == NormPlacement::Pre;
    t.mem.clear();
    if (!cfg.transparent_attention) {
        if (pre) {
            ln_fwd(P(p, "enc.final_ln.g"), P(p, "enc.final_ln.b"), t.outs.back(), t.S, d,
                   t.single_ln);
            t.mem.push_back(t.single_ln.out);
        } else {
            t.mem.push_back(t.outs.back());
        }
        return;
    }
    const Tensor& logits = P(p, "trans.logits");
    size_t J = cfg.dec_layers, K = L + 1;
    t.sweights = logits.v;
    kern::active().softmax_rows(J, K, t.sweights.data());
    t.mem_ln.assign(pre ? J : 0, {});
    for (size_t j = 0; j < J; ++j) {
        std::vector<double> combo(t.S * d, 0.0);
        for (size_t i = 0; i < K; ++i) {
            kern::active().axpy(t.S * d, t.sweights[j * K + i], t.outs[i].data(),
                                combo.data());
        }
        if (pre) {
            ln_fwd(P(p, "enc.final_ln.g"), P(p, "enc.final_ln.b"), std::move(combo), t.S, d,
                   t.mem_ln[j]);
            t.mem.push_back(t.mem_ln[j].out);
        } else {
            t.mem.push_back(std::move(combo));
        }
    }
}

/// dmem[j] = gradient w.r.t. memory j (one entry when non-transparent).
void encoder_bwd(const ModelConfig& cfg, Params& p, const EncTape& t,
                 std::vector<std::vector<double>>& dmem) {
    size_t d = cfg.d_model, L = cfg.enc_layers, S = t.S;
    bool pre = cfg.norm_placement == NormPlacement::Pre;

    // gradient w.r.t. each collected encoder output
    std::vector<std::vector<double>> douts(L + 1, std::vector<double>(S * d, 0.0));
    if (!cfg.transparent_attention) {
        if (pre) {
            ln_bwd(PM(p, "enc.final_ln.g"), PM(p, "enc.final_ln.b"), t.single_ln, d,
                   dmem[0].data(), douts[L].data());
        } else {
            douts[L] = dmem[0];
        }
    } else {
        size_t J = cfg.dec_layers, K = L + 1;
        Tensor& logits = PM(p, "trans.logits");
        for (size_t j = 0; j < J; ++j) {
            std::vector<double> dcombo;
            if (pre) {
                dcombo.assign(S * d, 0.0);
                ln_bwd(PM(p, "enc.final_ln.g"), PM(p, "enc.final_ln.b"), t.mem_ln[j], d,
                       dmem[j].data(), dcombo.data());
            } else {
                dcombo = std::move(dmem[j]);
            }
            // combo = sum_i s_ji outs[i]
            std::vector<double> dsw(K, 0.0);
            for (size_t i = 0; i < K; ++i) {
                double s = t.sweights[j * K + i];
                kern::active().axpy(S * d, s, dcombo.data(), douts[i].data());
                dsw[i] = kern::active().dot(S * d, dcombo.data(), t.outs[i].data());
            }
            const double* sw = t.sweights.data() + j * K;
            double inner = kern::active().dot(K, dsw.data(), sw);
            for (size_t i = 0; i < K; ++i) {
                logits.g[j * K + i] += sw[i] * (dsw[i] - inner);
            }
        }
    }

    std::vector<double> dx = std::move(douts[L]);
    for (size_t i = L; i-- > 0;) {
        std::string base = "enc." + std::to_string(i);
        const EncLayerTape& lt = t.layers[i];
        sublayer_bwd(cfg, p, base + ".ln2", lt.ffn_s, dx, S,
                     [&](const std::vector<double>& ds) {
                         std::vector<double> din(S * d, 0.0);
                         ffn_bwd(p, base + ".ffn", lt.ffn, ds, din);
                         return din;
                     });
        sublayer_bwd(cfg, p, base + ".ln1", lt.attn_s, dx, S,
                     [&](const std::vector<double>& ds) {
                         std::vector<double> din(S * d, 0.0);
                         attn_bwd(cfg, attn_muts(p, base + ".attn"), lt.attn, ds, din, din);
                         return din;
                     });
        kern::active().add(S * d, douts[i].data(), dx.data());
    }
    embed_bwd(cfg, PM(p, emb_name(cfg, false)), t.emb, std::move(dx));
}

// ---- decoder forward/backward ----------------------------------------------------

void decoder_fwd(const ModelConfig& cfg, const Params& p, const std::vector<int32_t>& dec_in,
                 const EncTape& enc, Rng* rng, DecTape& t) {
    size_t d = cfg.d_model, J = cfg.dec_layers;
    embed_fwd(cfg, P(p, emb_name(cfg, true)), dec_in, rng, t.emb);
    t.T = dec_in.size();
    t.layers.assign(J, {});
    std::vector<double> x = t.emb.out;
    for (size_t j = 0; j < J; ++j) {
        std::string base = "dec." + std::to_string(j);
        DecLayerTape& lt = t.layers[j];
        const std::vector<double>& memory =
            cfg.transparent_attention ? enc.mem[j] : enc.mem[0];
        sublayer_fwd(cfg, p, base + ".ln1", x, t.T, lt.self_s, rng,
                     [&](const std::vector<double>& in) {
                         std::vector<double> out;
                         attn_fwd(cfg, attn_refs(p, base + ".self"), in, in, t.T, t.T, true,
                                  lt.self, out);
                         return out;
                     });
        sublayer_fwd(cfg, p, base + ".ln2", x, t.T, lt.cross_s, rng,
                     [&](const std::vector<double>& in) {
                         std::vector<double> out;
                         attn_fwd(cfg, attn_refs(p, base + ".cross"), in, memory, t.T, enc.S,
                                  false, lt.cross, out);
                         return out;
                     });
        sublayer_fwd(cfg, p, base + ".ln3", x, t.T, lt.ffn_s, rng,
                     [&](const std::vector<double>& in) {
                         std::vector<double> out;
                         ffn_fwd(p, base + ".ffn", in, t.T, lt.ffn, out);
                         return out;
                     });
    }
    if (cfg.norm_placement == NormPlacement::Pre) {
        ln_fwd(P(p, "dec.final_ln.g"), P(p, "dec.final_ln.b"), std::move(x), t.T, d,
               t.final_ln);
        t.top = t.final_ln.out;
    } else {
        t.top = std::move(x);
    }
}

void decoder_bwd(const ModelConfig& cfg, Params& p, const DecTape& t, const EncTape& enc,
                 std::vector<double> dtop, std::vector<std::vector<double>>& dmem) {
    size_t d = cfg.d_model, J = cfg.dec_layers, T = t.T;
    std::vector<double> dx;
    if (cfg.norm_placement == NormPlacement::Pre) {
        dx.assign(T * d, 0.0);
        ln_bwd(PM(p, "dec.final_ln.g"), PM(p, "dec.final_ln.b"), t.final_ln, d, dtop.data(),
               dx.data());
    } else {
        dx = std::move(dtop);
    }
    dmem.assign(cfg.transparent_attention ? J : 1,
                std::vector<double>(enc.S * d, 0.0));
    for (size_t j = J; j-- > 0;) {
        std::string base = "dec." + std::to_string(j);
        const DecLayerTape& lt = t.layers[j];
        std::vector<double>& dmemory = cfg.transparent_attention ? dmem[j] : dmem[0];
        sublayer_bwd(cfg, p, base + ".ln3", lt.ffn_s, dx, T,
                     [&](const std::vector<double>& ds) {
                         std::vector<double> din(T * d, 0.0);
                         ffn_bwd(p, base + ".ffn", lt.ffn, ds, din);
                         return din;
                     });
        sublayer_bwd(cfg, p, base + ".ln2", lt.cross_s, dx, T,
                     [&](const std::vector<double>& ds) {
                         std::vector<double> din(T * d, 0.0);
                         attn_bwd(cfg, attn_muts(p, base + ".cross"), lt.cross, ds, din,
                                  dmemory);
                         return din;
                     });
        sublayer_bwd(cfg, p, base + ".ln1", lt.self_s, dx, T,
                     [&](const std::vector<double>& ds) {
                         std::vector<double> din(T * d, 0.0);
                         attn_bwd(cfg, attn_muts(p, base + ".self"), lt.self, ds, din, din);
                         return din;
                     });
    }
    embed_bwd(cfg, PM(p, emb_name(cfg, true)), t.emb, std::move(dx));
}

// ---- output layer / loss ------------------------------------------------------------

/// Label-smoothed cross entropy summed over positions; fills dlogits when
/// requested.
double output_loss(const Params& p, const std::vector<double>& top, size_t T, size_t Vt,
                   const std::vector<int32_t>& targets, double eps,
                   std::vector<double>* dlogits) {
    const Tensor& w = P(p, "out.w");
    const Tensor& b = P(p, "out.b");
    std::vector<double> logits;
    linear_fwd(w, b, top.data(), T, logits);
    double loss = 0.0;
    if (dlogits) dlogits->assign(T * Vt, 0.0);
    for (size_t t = 0; t < T; ++t) {
        const double* row = logits.data() + t * Vt;
        double mx = row[0];
        for (size_t c = 1; c < Vt; ++c) mx = std::max(mx, row[c]);
        double sum = 0.0, logit_sum = 0.0;
        for (size_t c = 0; c < Vt; ++c) {
            sum += std::exp(row[c] - mx);
            logit_sum += row[c];
        }
        double lse = mx + std::log(sum);
        int32_t y = targets[t];
        // loss = -(1-eps)·log p_y - eps/V · sum_c log p_c
        loss += -(1.0 - eps) * (row[y] - lse) -
                eps / static_cast<double>(Vt) * (logit_sum - static_cast<double>(Vt) * lse);
        if (dlogits) {
            double* dl = dlogits->data() + t * Vt;
            for (size_t c = 0; c < Vt; ++c) {
                double prob = std::exp(row[c] - lse);
                dl[c] = prob - eps / static_cast<double>(Vt);
            }
            dl[y] -= 1.0 - eps;
        }
    }
    return loss;
}

std::vector<int32_t> with_eos(const std::vector<int32_t>& ids) {
    std::vector<int32_t> out = ids;
    out.push_back(Vocab::kEos);
    return out;
}

std::vector<int32_t> dec_input(const std::vector<int32_t>& tgt) {
    std::vector<int32_t> out;
    out.reserve(tgt.size() + 1);
    out.push_back(Vocab::kBos);
    out.insert(out.end(), tgt.begin(), tgt.end());
    return out;
}

void check_ids(const std::vector<int32_t>& ids, size_t vocab, const char* side) {
    for (int32_t id : ids) {
        if (id < 0 || static_cast<size_t>(id) >= vocab) {
            throw Error(std::string(side) + " token id " + std::to_string(id) +
                        " outside vocabulary of " + std::to_string(vocab));
        }
    }
}

}  // namespace

// ---- Transformer public API -----------------------------------------------------------

Tensor& Transformer::param(const std::string& name) { return PM(params_, name); }

const Tensor& Transformer::param(const std::string& name) const { return P(params_, name); }

size_t Transformer::param_count() const {
    size_t n = 0;
    for (const auto& [name, t] : params_) n += t.numel();
    return n;
}

void Transformer::zero_grads() {
    for (auto& [name, t] : params_) t.zero_grad();
}

void Transformer::load_params(const std::map<std::string, Tensor>& src) {
    if (src.size() != params_.size()) {
        throw Error("parameter table size mismatch: expected " +
                    std::to_string(params_.size()) + ", got " + std::to_string(src.size()));
    }
    for (auto& [name, t] : params_) {
        auto it = src.find(name);
        if (it == src.end()) throw Error("missing parameter '" + name + "'");
        if (!t.same_shape(it->second)) throw Error("shape mismatch for '" + name + "'");
        t.v = it->second.v;
    }
}

Transformer Transformer::build(const ModelConfig& config, uint64_t seed) {
    config.validate();
    Transformer m;
    m.config_ = config;
    size_t d = config.d_model, F = config.d_ffn;

    auto mat = [&](const std::string& name, size_t r, size_t c) {
        m.params_.emplace(name, Tensor({r, c}));
    };
    auto vec = [&](const std::string& name, size_t n) { m.params_.emplace(name, Tensor({n})); };
    auto attn = [&](const std::string& prefix) {
        for (const char* w : {"wq", "wk", "wv", "wo"}) mat(prefix + "." + w, d, d);
        for (const char* b : {"bq", "bk", "bv", "bo"}) vec(prefix + "." + b, d);
    };
    auto ln = [&](const std::string& prefix) {
        vec(prefix + ".g", d);
        vec(prefix + ".b", d);
    };
    auto ffn = [&](const std::string& prefix) {
        mat(prefix + ".w1", d, F);
        vec(prefix + ".b1", F);
        mat(prefix + ".w2", F, d);
        vec(prefix + ".b2", d);
    };

    if (config.share_embeddings) {
        mat("embed.shared", config.src_vocab, d);
    } else {
        mat("embed.src", config.src_vocab, d);
        mat("embed.tgt", config.tgt_vocab, d);
    }
    for (size_t i = 0; i < config.enc_layers; ++i) {
        std::string base = "enc." + std::to_string(i);
        attn(base + ".attn");
        ln(base + ".ln1");
        ln(base + ".ln2");
        ffn(base + ".ffn");
    }
    for (size_t j = 0; j < config.dec_layers; ++j) {
        std::string base = "dec." + std::to_string(j);
        attn(base + ".self");
        attn(base + ".cross");
        ln(base + ".ln1");
        ln(base + ".ln2");
        ln(base + ".ln3");
        ffn(base + ".ffn");
    }
    if (config.norm_placement == NormPlacement::Pre) {
        ln("enc.final_ln");
        ln("dec.final_ln");
    }
    mat("out.w", d, config.tgt_vocab);
    vec("out.b", config.tgt_vocab);
    if (config.transparent_attention) {
        mat("trans.logits", config.dec_layers, config.enc_layers + 1);
    }

    // seeded init, iterated in name order so it is reproducible
    Rng rng(seed);
    for (auto& [name, t] : m.params_) {
        if (name == "trans.logits") continue;  // zero = uniform combination
        if (name.rfind("embed.", 0) == 0) {
            double std = 1.0 / std::sqrt(static_cast<double>(d));
            for (double& x : t.v) {
                double u1 = rng.unit(), u2 = rng.unit();
                x = std * std::sqrt(-2.0 * std::log1p(-u1)) *
                    std::cos(2.0 * 3.14159265358979323846 * u2);
            }
        } else if (t.dims.size() == 2) {
            double limit = std::sqrt(6.0 / static_cast<double>(t.dims[0] + t.dims[1]));
            for (double& x : t.v) x = (2.0 * rng.unit() - 1.0) * limit;
        } else if (name.size() > 2 && name.compare(name.size() - 2, 2, ".g") == 0) {
            std::fill(t.v.begin(), t.v.end(), 1.0);
        }  // biases stay zero
    }
    return m;
}

double Transformer::forward_backward(const std::vector<int32_t>& src,
                                     const std::vector<int32_t>& tgt, double label_smoothing,
                                     Rng* dropout_rng) {
    check_ids(src, config_.src_vocab, "source");
    check_ids(tgt, config_.tgt_vocab, "target");
    std::vector<int32_t> src_ids = with_eos(src);
    std::vector<int32_t> in_ids = dec_input(tgt);
    std::vector<int32_t> targets = with_eos(tgt);

    EncTape enc;
    encoder_fwd(config_, params_, src_ids, dropout_rng, enc);
    DecTape dec;
    decoder_fwd(config_, params_, in_ids, enc, dropout_rng, dec);

    std::vector<double> dlogits;
    double loss = output_loss(params_, dec.top, dec.T, config_.tgt_vocab, targets,
                              label_smoothing, &dlogits);

    // out projection backward
    Tensor& w = PM(params_, "out.w");
    Tensor& b = PM(params_, "out.b");
    std::vector<double> dtop(dec.T * config_.d_model, 0.0);
    linear_bwd(w, b, dec.top.data(), dlogits.data(), dec.T, dtop.data());

    std::vector<std::vector<double>> dmem;
    decoder_bwd(config_, params_, dec, enc, std::move(dtop), dmem);
    encoder_bwd(config_, params_, enc, dmem);
    return loss;
}

double Transformer::eval_loss(const std::vector<int32_t>& src, const std::vector<int32_t>& tgt,
                              double label_smoothing) const {
    check_ids(src, config_.src_vocab, "source");
    check_ids(tgt, config_.tgt_vocab, "target");
    EncTape enc;
    encoder_fwd(config_, params_, with_eos(src), nullptr, enc);
    DecTape dec;
    decoder_fwd(config_, params_, dec_input(tgt), enc, nullptr, dec);
    return output_loss(params_, dec.top, dec.T, config_.tgt_vocab, with_eos(tgt),
                       label_smoothing, nullptr);
}

namespace {

/// Log-probabilities of the next token after the given target prefix.
std::vector<double> next_logprobs(const ModelConfig& cfg, const Params& p, const EncTape& enc,
                                  const std::vector<int32_t>& prefix) {
    DecTape dec;
    decoder_fwd(cfg, p, dec_input(prefix), enc, nullptr, dec);
    size_t Vt = cfg.tgt_vocab, d = cfg.d_model;
    const Tensor& w = P(p, "out.w");
    const Tensor& b = P(p, "out.b");
    std::vector<double> logits;
    linear_fwd(w, b, dec.top.data() + (dec.T - 1) * d, 1, logits);
    double mx = logits[0];
    for (size_t c = 1; c < Vt; ++c) mx = std::max(mx, logits[c]);
    double sum = 0.0;
    for (size_t c = 0; c < Vt; ++c) sum += std::exp(logits[c] - mx);
    double lse = mx + std::log(sum);
    for (size_t c = 0; c < Vt; ++c) logits[c] -= lse;
    return logits;
}

}  // namespace

DecodeResult Transformer::greedy(const std::vector<int32_t>& src, size_t max_len) const {
    if (src.empty()) return {};
    check_ids(src, config_.src_vocab, "source");
    EncTape enc;
    encoder_fwd(config_, params_, with_eos(src), nullptr, enc);
    size_t cap = std::min(max_len, config_.max_positions - 1);
    DecodeResult r;
    while (true) {
        if (r.ids.size() >= cap) {
            r.truncated = true;
            break;
        }
        std::vector<double> lp = next_logprobs(config_, params_, enc, r.ids);
        size_t best = 0;
        for (size_t c = 1; c < lp.size(); ++c) {
            if (lp[c] > lp[best]) best = c;
        }
        if (static_cast<int32_t>(best) == Vocab::kEos) break;
        r.ids.push_back(static_cast<int32_t>(best));
    }
    return r;
}

DecodeResult Transformer::beam(const std::vector<int32_t>& src, size_t width,
                               size_t max_len) const {
    if (width == 0) throw Error("beam width must be positive");
    if (src.empty()) return {};
    check_ids(src, config_.src_vocab, "source");
    EncTape enc;
    encoder_fwd(config_, params_, with_eos(src), nullptr, enc);
    size_t cap = std::min(max_len, config_.max_positions - 1);

    struct Hyp {
        std::vector<int32_t> ids;
        double logp = 0.0;
        bool done = false;
        double norm() const {
            size_t terms = ids.size() + (done ? 1 : 0);
            return logp / static_cast<double>(std::max<size_t>(1, terms));
        }
    };
    std::vector<Hyp> active = {Hyp{}};
    std::vector<Hyp> finished;

    for (size_t step = 0; step < cap && !active.empty(); ++step) {
        struct Cand {
            double logp;
            size_t parent;
            int32_t tok;
        };
        std::vector<Cand> cands;
        for (size_t a = 0; a < active.size(); ++a) {
            std::vector<double> lp = next_logprobs(config_, params_, enc, active[a].ids);
            for (size_t c = 0; c < lp.size(); ++c) {
                cands.push_back({active[a].logp + lp[c], a, static_cast<int32_t>(c)});
            }
        }
        std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
            if (x.logp != y.logp) return x.logp > y.logp;
            if (x.tok != y.tok) return x.tok < y.tok;
            return x.parent < y.parent;
        });
        // consume the top `width` candidates: end-marker ones finish, the
        // rest stay active
        std::vector<Hyp> next;
        size_t taken = 0;
        for (const Cand& c : cands) {
            if (taken++ >= width) break;
            Hyp h = active[c.parent];
            h.logp = c.logp;
            if (c.tok == Vocab::kEos) {
                h.done = true;
                finished.push_back(std::move(h));
            } else {
                h.ids.push_back(c.tok);
                next.push_back(std::move(h));
            }
        }
        active = std::move(next);
    }
    for (Hyp& h : active) finished.push_back(std::move(h));  // hit the cap

    const Hyp* best = nullptr;
    for (const Hyp& h : finished) {
        if (!best || h.norm() > best->norm()) best = &h;
    }
    DecodeResult r;
    if (best) {
        r.ids = best->ids;
        r.truncated = !best->done;
    }
    return r;
}

}  // namespace mtr
