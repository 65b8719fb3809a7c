#include "mtr/model/checkpoint.hpp"

#include <algorithm>
#include <numeric>

#include "mtr/util/binio.hpp"
#include "mtr/util/error.hpp"
#include "mtr/util/io.hpp"

namespace mtr {

namespace {

constexpr char kMagic[] = "MTRCKPT1";

void write_segmentation(std::string& out, const SegmentationModel& seg) {
    binio::put_u32(out, seg.kind == SegmentationModel::Kind::Bpe ? 1 : 0);
    if (seg.kind == SegmentationModel::Kind::Bpe) {
        binio::put_u64(out, seg.merges.size());
        for (const auto& [l, r] : seg.merges) {
            binio::put_str(out, l);
            binio::put_str(out, r);
        }
    }
}

SegmentationModel read_segmentation(const std::string& in, size_t& pos) {
    SegmentationModel seg;
    uint32_t kind = binio::get_u32(in, pos);
    if (kind > 1) throw Error("bad segmentation kind in checkpoint");
    seg.kind = kind == 1 ? SegmentationModel::Kind::Bpe : SegmentationModel::Kind::Character;
    if (seg.kind == SegmentationModel::Kind::Bpe) {
        uint64_t n = binio::get_u64(in, pos);
        seg.merges.reserve(n);
        for (uint64_t i = 0; i < n; ++i) {
            std::string l = binio::get_str(in, pos);
            std::string r = binio::get_str(in, pos);
            seg.merges.emplace_back(std::move(l), std::move(r));
        }
    }
    return seg;
}

void write_tensor(std::string& out, const std::string& name, const Tensor& t) {
    binio::put_str(out, name);
    binio::put_u32(out, static_cast<uint32_t>(t.dims.size()));
    for (size_t d : t.dims) binio::put_u64(out, d);
    for (double v : t.v) binio::put_f64(out, v);
}

}  // namespace

Transformer Checkpoint::restore() const {
    Transformer m = Transformer::build(config, 0);
    m.load_params(params);
    return m;
}

void save_checkpoint(const std::string& path, const Transformer& model,
                     const TranslationAssets& assets, uint64_t epoch, double val_ppl) {
    std::string out;
    out += kMagic;
    binio::put_u32(out, 1);  // container version
    binio::put_u64(out, epoch);
    binio::put_f64(out, val_ppl);
    binio::put_str(out, model.config().to_text());
    write_segmentation(out, assets.src_seg);
    write_segmentation(out, assets.tgt_seg);
    VocabCodec::write(out, assets.src_vocab);
    VocabCodec::write(out, assets.tgt_vocab);
    binio::put_u32(out, static_cast<uint32_t>(model.params().size()));
    for (const auto& [name, t] : model.params()) write_tensor(out, name, t);
    write_file(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::string in = read_file(path);
    size_t pos = 0;
    size_t magic_len = sizeof(kMagic) - 1;
    binio::need(in, pos, magic_len);
    if (in.compare(0, magic_len, kMagic) != 0) {
        throw Error(path + " is not a checkpoint file (bad magic)");
    }
    pos += magic_len;
    uint32_t version = binio::get_u32(in, pos);
    if (version != 1) {
        throw Error("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint c;
    c.epoch = binio::get_u64(in, pos);
    c.val_ppl = binio::get_f64(in, pos);
    c.config = ModelConfig::from_text(binio::get_str(in, pos));
    c.assets.src_seg = read_segmentation(in, pos);
    c.assets.tgt_seg = read_segmentation(in, pos);
    c.assets.src_vocab = VocabCodec::read(in, pos);
    c.assets.tgt_vocab = VocabCodec::read(in, pos);
    uint32_t n_tensors = binio::get_u32(in, pos);
    for (uint32_t i = 0; i < n_tensors; ++i) {
        std::string name = binio::get_str(in, pos);
        uint32_t ndims = binio::get_u32(in, pos);
        std::vector<size_t> dims;
        for (uint32_t k = 0; k < ndims; ++k) {
            dims.push_back(static_cast<size_t>(binio::get_u64(in, pos)));
        }
        Tensor t(dims);
        for (double& v : t.v) v = binio::get_f64(in, pos);
        c.params.emplace(std::move(name), std::move(t));
    }
    if (pos != in.size()) throw Error("trailing bytes in checkpoint " + path);
    return c;
}

Checkpoint average_checkpoints(const std::vector<Checkpoint>& ckpts) {
    if (ckpts.empty()) throw Error("cannot average zero checkpoints");
    for (size_t i = 1; i < ckpts.size(); ++i) {
        if (ckpts[i].params.size() != ckpts[0].params.size()) {
            throw Error("checkpoint " + std::to_string(i) + " has a different parameter set");
        }
    }
    Checkpoint avg = ckpts[0];
    double k = static_cast<double>(ckpts.size());
    for (auto& [name, t] : avg.params) {
        // mean = x0 + (sum_i (x_i - x0)) / k: exact when all inputs are
        // equal, and exact for the symmetric and small-integer cases too
        std::vector<double> delta(t.v.size(), 0.0);
        for (size_t i = 1; i < ckpts.size(); ++i) {
            auto it = ckpts[i].params.find(name);
            if (it == ckpts[i].params.end()) {
                throw Error("checkpoint " + std::to_string(i) + " is missing parameter '" +
                            name + "'");
            }
            if (!t.same_shape(it->second)) {
                throw Error("shape mismatch for parameter '" + name + "'");
            }
            for (size_t j = 0; j < t.v.size(); ++j) delta[j] += it->second.v[j] - t.v[j];
        }
        for (size_t j = 0; j < t.v.size(); ++j) t.v[j] += delta[j] / k;
    }
    return avg;
}

std::vector<size_t> best_checkpoints(const std::vector<Checkpoint>& ckpts, size_t k) {
    if (ckpts.size() < k) {
        throw Error("asked for " + std::to_string(k) + " best checkpoints but only " +
                    std::to_string(ckpts.size()) + " exist");
    }
    std::vector<size_t> order(ckpts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (ckpts[a].val_ppl != ckpts[b].val_ppl) return ckpts[a].val_ppl < ckpts[b].val_ppl;
        return ckpts[a].epoch < ckpts[b].epoch;
    });
    order.resize(k);
    return order;
}

}  // namespace mtr
