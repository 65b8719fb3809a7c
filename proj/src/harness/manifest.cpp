#include "mtr/harness/manifest.hpp"

#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "mtr/util/error.hpp"
#include "mtr/util/io.hpp"

namespace mtr {

using nlohmann::json;

void save_manifest(const std::string& path, const RunManifest& manifest) {
    json cells = json::object();
    for (const auto& [id, cell] : manifest.cells) {
        for (const auto& [key, value] : cell.metrics) {
            // JSON has no inf/nan literal; a silent null would poison reload
            if (!std::isfinite(value)) {
                throw Error("manifest: non-finite metric " + key + " in cell " + id);
            }
        }
        json c = {{"status", cell.status}, {"metrics", cell.metrics}};
        if (!cell.label.empty()) c["label"] = cell.label;
        if (!cell.error.empty()) c["error"] = cell.error;
        cells[id] = std::move(c);
    }
    json j = {{"plan_hash", manifest.plan_hash},
              {"kind", manifest.kind},
              {"complete", manifest.complete},
              {"cells", std::move(cells)}};

    std::filesystem::path dest(path);
    std::filesystem::path tmp = dest;
    tmp += ".tmp";
    write_file(tmp.string(), j.dump(2) + "\n");
    std::filesystem::rename(tmp, dest);
}

RunManifest load_manifest(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error("manifest " + path + ": " + e.what());
    }
    RunManifest m;
    try {
        m.plan_hash = j.at("plan_hash").get<std::string>();
        m.kind = j.at("kind").get<std::string>();
        m.complete = j.at("complete").get<bool>();
        for (const auto& [id, c] : j.at("cells").items()) {
            CellResult cell;
            cell.status = c.at("status").get<std::string>();
            cell.label = c.value("label", "");
            cell.error = c.value("error", "");
            for (const auto& [k, v] : c.at("metrics").items()) {
                cell.metrics[k] = v.get<double>();
            }
            m.cells[id] = std::move(cell);
        }
    } catch (const json::exception& e) {
        throw Error("manifest " + path + ": " + e.what());
    }
    return m;
}

}  // namespace mtr
