#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mtr/harness/manifest.hpp"
#include "mtr/harness/plan.hpp"

namespace mtr {

struct RunOptions {
    size_t jobs = 1;       // concurrent cells; each cell is internally deterministic
    bool resume = false;   // continue from an existing manifest
    bool verbose = false;  // per-cell progress lines on stderr
};

/// Executes the plan cell by cell, persisting the manifest after every cell
/// (atomically, single writer). Results are independent of job count and of
/// completion order: every random stream derives from the plan seed and the
/// cell id. A failed cell is recorded; with halt_on_error no further cells
/// are started. When every cell completes, reports are emitted and
/// manifest.complete is set.
///
/// The output directory must be fresh, or hold a manifest for this same plan
/// when resuming; a manifest for a different plan is an error.
RunManifest run_plan(const ExperimentPlan& plan, const RunOptions& opts = {});

/// Every cell id the plan expects, in report order.
std::vector<std::string> plan_cell_ids(const ExperimentPlan& plan);

/// Renders the CSV and SVG reports for a complete manifest under
/// <out.dir>/csv and <out.dir>/svg and returns the written paths. Errors
/// with the list of missing or failed cells when the manifest is incomplete.
/// Emission reads only the manifest, so re-emission is byte-identical.
std::vector<std::string> emit_report(const ExperimentPlan& plan, const RunManifest& manifest);

}  // namespace mtr
