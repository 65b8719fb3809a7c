#include <cmath>
#include <filesystem>
#include <sstream>

#include "mtr/harness/runner.hpp"
#include "mtr/harness/svg.hpp"
#include "mtr/util/error.hpp"
#include "mtr/util/io.hpp"

namespace mtr {

namespace fs = std::filesystem;

namespace {

std::string num4(double v) { return format_fixed(v, 4); }

std::string intval(double v) { return std::to_string(llround(v)); }

/// Sweep level index -> (percent tag, probability) per noise kind family.
std::pair<int, double> level_point(NoiseKind kind, int index) {
    if (kind == NoiseKind::Natural) return {10 * index, index / 10.0};
    return {index, index / 100.0};
}

struct Emitter {
    const ExperimentPlan& plan;
    const RunManifest& manifest;
    std::vector<std::string> written;

    const CellResult& cell(const std::string& id) const {
        auto it = manifest.cells.find(id);
        if (it == manifest.cells.end()) throw Error("manifest has no cell " + id);
        return it->second;
    }

    void write(const std::string& sub, const std::string& name, const std::string& content) {
        fs::path path = fs::path(plan.out_dir) / sub / name;
        write_file(path.string(), content);
        written.push_back(path.string());
    }

    void vocab_sweep() {
        std::ostringstream csv;
        csv << "level,src_vocab,tgt_vocab,dropout,lr,val_ppl,bleu\n";
        std::vector<std::string> labels;
        std::vector<double> bleus;
        for (const SegLevel& level : plan.seg_levels) {
            const CellResult& c = cell(level.name());
            csv << level.name() << ',' << intval(c.metrics.at("src_vocab")) << ','
                << intval(c.metrics.at("tgt_vocab")) << ',' << num4(c.metrics.at("dropout"))
                << ',' << num4(c.metrics.at("lr")) << ',' << num4(c.metrics.at("val_ppl"))
                << ',' << num4(c.metrics.at("bleu")) << '\n';
            labels.push_back(level.name());
            bleus.push_back(c.metrics.at("bleu"));
        }
        write("csv", "vocab_sweep.csv", csv.str());
        write("svg", "bleu_by_vocab.svg",
              bar_chart("BLEU by segmentation", "BLEU", labels, bleus).svg);
    }

    void noise_sweep() {
        std::vector<Series> series;
        std::vector<FitLine> fits;
        std::ostringstream agg;
        agg << "level,beta,alpha,r2\n";
        for (const SegLevel& level : plan.seg_levels) {
            const CellResult& c = cell(level.name());
            std::ostringstream csv;
            csv << "percent,p,bleu,beta,alpha,r2\n";
            Series s{level.name(), {}};
            for (int idx : plan.noise_levels) {
                auto [percent, p] = level_point(plan.noise_kind, idx);
                double bleu = c.metrics.at("bleu.p" + std::string(idx < 10 ? "0" : "") +
                                           std::to_string(idx));
                csv << percent << ',' << num4(p) << ',' << num4(bleu) << ",,,\n";
                s.points.emplace_back(p, bleu);
            }
            double beta = c.metrics.at("beta");
            double alpha = c.metrics.at("alpha");
            double r2 = c.metrics.at("r2");
            csv << "fit,,," << num4(beta) << ',' << num4(alpha) << ',' << num4(r2) << '\n';
            write("csv", "noise_sweep." + level.name() + ".csv", csv.str());
            agg << level.name() << ',' << num4(beta) << ',' << num4(alpha) << ',' << num4(r2)
                << '\n';
            series.push_back(std::move(s));
            fits.push_back({level.name() + " fit", beta, alpha});
        }
        write("csv", "sensitivity.csv", agg.str());
        write("svg", "bleu_vs_p.svg",
              line_chart("BLEU under " + std::string(noise_kind_name(plan.noise_kind)) +
                             " noise",
                         "noise probability", "BLEU", series, fits)
                  .svg);
        std::vector<std::string> labels;
        std::vector<double> betas;
        for (const SegLevel& level : plan.seg_levels) {
            labels.push_back(level.name());
            betas.push_back(cell(level.name()).metrics.at("beta"));
        }
        write("svg", "beta_by_vocab.svg",
              bar_chart("Noise sensitivity by segmentation", "beta (BLEU per unit p)", labels,
                        betas)
                  .svg);
    }

    void matrix() {
        std::vector<std::string> kinds = {"clean"};
        for (NoiseKind k : plan.matrix_kinds) kinds.push_back(noise_kind_name(k));
        for (const SegLevel& level : plan.seg_levels) {
            std::ostringstream csv;
            csv << "train";
            for (const std::string& k : kinds) csv << ',' << k;
            csv << '\n';
            std::vector<std::vector<double>> by_test(kinds.size(),
                                                     std::vector<double>(kinds.size()));
            for (size_t r = 0; r < kinds.size(); ++r) {
                const CellResult& c = cell(level.name() + ".train-" + kinds[r]);
                csv << kinds[r];
                for (size_t t = 0; t < kinds.size(); ++t) {
                    double bleu = c.metrics.at("bleu." + kinds[t]);
                    csv << ',' << num4(bleu);
                    by_test[t][r] = bleu;
                }
                csv << '\n';
            }
            write("csv", "matched_noise." + level.name() + ".csv", csv.str());
            write("svg", "matched_noise." + level.name() + ".svg",
                  grouped_bar_chart("Train/test noise transfer (" + level.name() + ")",
                                    "BLEU", kinds, kinds, by_test)
                      .svg);
        }
    }

    void domain_report() {
        std::ostringstream csv;
        csv << "test_set,sentences,unseen_pct,kn_ppl\n";
        for (size_t i = 0; i < plan.tests.size(); ++i) {
            char id[16];
            std::snprintf(id, sizeof id, "test%02zu", i);
            const CellResult& c = cell(id);
            csv << c.label << ',' << intval(c.metrics.at("sentences")) << ','
                << num4(c.metrics.at("unseen_pct")) << ',' << num4(c.metrics.at("kn_ppl"))
                << '\n';
        }
        write("csv", "domain_report.csv", csv.str());
    }

    void depth_sweep() {
        std::ostringstream csv;
        csv << "depth,variant,dropout,lr,val_ppl,bleu\n";
        Series plain{"pre-norm", {}}, trans{"pre-norm + transparent", {}};
        for (size_t depth : plan.depths) {
            for (bool transparent : {false, true}) {
                std::string id = "d" + std::to_string(depth) +
                                 (transparent ? ".transparent" : ".plain");
                const CellResult& c = cell(id);
                csv << depth << ',' << (transparent ? "transparent" : "plain") << ','
                    << num4(c.metrics.at("dropout")) << ',' << num4(c.metrics.at("lr")) << ','
                    << num4(c.metrics.at("val_ppl")) << ',' << num4(c.metrics.at("bleu"))
                    << '\n';
                (transparent ? trans : plain)
                    .points.emplace_back(static_cast<double>(depth), c.metrics.at("bleu"));
            }
        }
        write("csv", "depth_sweep.csv", csv.str());
        write("svg", "bleu_vs_depth.svg",
              line_chart("BLEU by encoder depth", "encoder layers", "BLEU", {plain, trans})
                  .svg);
    }
};

}  // namespace

std::vector<std::string> emit_report(const ExperimentPlan& plan, const RunManifest& manifest) {
    std::string missing;
    for (const std::string& id : plan_cell_ids(plan)) {
        auto it = manifest.cells.find(id);
        if (it == manifest.cells.end() || !it->second.done()) {
            missing += missing.empty() ? id : ", " + id;
        }
    }
    if (!missing.empty()) {
        throw Error("manifest incomplete; missing or failed cells: " + missing);
    }

    Emitter e{plan, manifest, {}};
    switch (plan.kind) {
        case PlanKind::VocabSweep: e.vocab_sweep(); break;
        case PlanKind::NoiseSweep: e.noise_sweep(); break;
        case PlanKind::MatchedNoiseMatrix: e.matrix(); break;
        case PlanKind::DomainReport: e.domain_report(); break;
        case PlanKind::DepthSweep: e.depth_sweep(); break;
    }
    return e.written;
}

}  // namespace mtr
