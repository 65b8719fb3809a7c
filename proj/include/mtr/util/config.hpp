#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace mtr {

/// Line-based `key = value` configuration dialect shared by train configs and
/// experiment plans.
///
///   - one `key = value` pair per line; whitespace around both is trimmed
///   - blank lines and lines starting with `#` are ignored
///   - duplicate keys are an error
///   - consumers must drain every key; `finish()` rejects unknown keys
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key);
    std::string get_string(const std::string& key, const std::string& fallback);
    int64_t get_int(const std::string& key);
    int64_t get_int(const std::string& key, int64_t fallback);
    uint64_t get_u64(const std::string& key, uint64_t fallback);
    double get_double(const std::string& key);
    double get_double(const std::string& key, double fallback);
    bool get_bool(const std::string& key, bool fallback);

    /// Whitespace-separated list values, e.g. `depths = 6 12 32`.
    std::vector<std::string> get_list(const std::string& key);
    std::vector<int64_t> get_int_list(const std::string& key);
    std::vector<double> get_double_list(const std::string& key);

    /// Throws if any key was never read.
    void finish() const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::string take(const std::string& key);

    std::string origin_;
    std::map<std::string, std::string> entries_;
    mutable std::set<std::string> used_;
};

}  // namespace mtr
