#pragma once

#include <map>
#include <string>

namespace mtr {

/// One unit of plan execution (typically one trained system or one report
/// row). Metrics are flat name -> value pairs; doubles round-trip the JSON
/// manifest bit-exactly, so reports emitted from a reloaded manifest are
/// byte-identical to ones emitted right after the run.
struct CellResult {
    std::string status;  // "done" | "failed"
    std::string label;   // display name for reports, may be empty
    std::string error;   // failure diagnostic, empty when done
    std::map<std::string, double> metrics;

    bool done() const { return status == "done"; }
};

struct RunManifest {
    std::string plan_hash;
    std::string kind;
    bool complete = false;  // every expected cell finished with status done
    std::map<std::string, CellResult> cells;
};

/// Writes JSON to a temporary file in the target directory, then renames it
/// over the destination: readers never observe a partial manifest.
void save_manifest(const std::string& path, const RunManifest& manifest);

RunManifest load_manifest(const std::string& path);

}  // namespace mtr
