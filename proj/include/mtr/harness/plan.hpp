#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtr/model/config.hpp"
#include "mtr/text/noise.hpp"

namespace mtr {

enum class PlanKind { VocabSweep, NoiseSweep, MatchedNoiseMatrix, DomainReport, DepthSweep };

const char* plan_kind_name(PlanKind kind);
std::optional<PlanKind> parse_plan_kind(const std::string& name);

/// One segmentation granularity of a sweep: character level or BPE with a
/// merge budget. Written "char" / "bpe:<merges>" in plan files.
struct SegLevel {
    bool character = true;
    size_t merges = 0;

    std::string name() const;
};

SegLevel parse_seg_level(const std::string& text);

/// A parsed experiment plan: which experiment to run, on which files, over
/// which segmentations / noises / depths, with which model and training
/// presets. Plans use the line-based `key = value` dialect; unknown keys are
/// errors.
struct ExperimentPlan {
    PlanKind kind = PlanKind::VocabSweep;

    // parallel data (training kinds)
    std::string train_src, train_tgt;
    std::string val_src, val_tgt;
    std::string test_src, test_tgt;
    // monolingual test sets (DomainReport)
    std::vector<std::string> tests;

    std::vector<SegLevel> seg_levels;

    NoiseKind noise_kind = NoiseKind::Replace;   // NoiseSweep
    std::vector<int> noise_levels;               // percent tags, 0 = clean
    std::vector<NoiseKind> matrix_kinds;         // MatchedNoiseMatrix rows/columns
    double train_noise_p = 0.05;                 // MatchedNoiseMatrix training noise
    std::string noise_lexicon;                   // confusion lexicon path (Natural)

    int lm_order = 5;                            // DomainReport
    std::vector<size_t> depths;                  // DepthSweep encoder depths

    ModelConfig model;                           // vocab sizes filled per cell
    TrainConfig train;
    std::vector<double> grid_dropout;            // optional hyperparameter grid
    std::vector<double> grid_lr;
    size_t beam_width = 1;

    std::string out_dir;
    uint64_t seed = 1;
    bool halt_on_error = true;
};

ExperimentPlan parse_plan_text(const std::string& text, const std::string& origin = "<plan>");
ExperimentPlan parse_plan_file(const std::string& path);

/// Checks the kind's required fields and that every referenced path exists.
void validate_plan(const ExperimentPlan& plan);

/// 16-hex-digit content hash over every semantic field, used to key the run
/// manifest so resumption rejects a changed plan.
std::string plan_hash(const ExperimentPlan& plan);

/// FNV-1a 64-bit over bytes: the stable string hash behind plan_hash and the
/// per-cell seed derivation (cell streams are keyed by cell id, not by
/// execution order).
uint64_t stable_hash64(const std::string& text);

}  // namespace mtr
