#include "mtr/util/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mtr/util/error.hpp"

namespace mtr {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config c;
    c.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            fail(origin + ":" + std::to_string(lineno) + ": expected `key = value`");
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (key.empty())
            fail(origin + ":" + std::to_string(lineno) + ": empty key");
        if (!c.entries_.emplace(key, val).second)
            fail(origin + ":" + std::to_string(lineno) + ": duplicate key `" + key + "`");
    }
    return c;
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

std::string Config::take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) fail(origin_ + ": missing required key `" + key + "`");
    used_.insert(key);
    return it->second;
}

std::string Config::get_string(const std::string& key) { return take(key); }

std::string Config::get_string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    return take(key);
}

int64_t Config::get_int(const std::string& key) {
    std::string v = take(key);
    try {
        size_t pos = 0;
        int64_t r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        fail(origin_ + ": key `" + key + "`: not an integer: " + v);
    }
}

int64_t Config::get_int(const std::string& key, int64_t fallback) {
    if (!has(key)) return fallback;
    return get_int(key);
}

uint64_t Config::get_u64(const std::string& key, uint64_t fallback) {
    if (!has(key)) return fallback;
    std::string v = take(key);
    try {
        size_t pos = 0;
        uint64_t r = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        fail(origin_ + ": key `" + key + "`: not a u64: " + v);
    }
}

double Config::get_double(const std::string& key) {
    std::string v = take(key);
    try {
        size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        fail(origin_ + ": key `" + key + "`: not a number: " + v);
    }
}

double Config::get_double(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return get_double(key);
}

bool Config::get_bool(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    std::string v = take(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(origin_ + ": key `" + key + "`: not a boolean: " + v);
}

std::vector<std::string> Config::get_list(const std::string& key) {
    std::istringstream in(take(key));
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::vector<int64_t> Config::get_int_list(const std::string& key) {
    std::vector<int64_t> out;
    for (const auto& s : get_list(key)) {
        try {
            out.push_back(std::stoll(s));
        } catch (const std::exception&) {
            fail(origin_ + ": key `" + key + "`: not an integer: " + s);
        }
    }
    return out;
}

std::vector<double> Config::get_double_list(const std::string& key) {
    std::vector<double> out;
    for (const auto& s : get_list(key)) {
        try {
            out.push_back(std::stod(s));
        } catch (const std::exception&) {
            fail(origin_ + ": key `" + key + "`: not a number: " + s);
        }
    }
    return out;
}

void Config::finish() const {
    for (const auto& [key, value] : entries_) {
        (void)value;
        if (!used_.count(key)) fail(origin_ + ": unknown key `" + key + "`");
    }
}

}  // namespace mtr
