#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "crease/error.hpp"
#include "crease/grid.hpp"
#include "crease/session.hpp"

namespace crease {

/// Raw key/value settings, later sources overriding earlier ones.
using ConfigValues = std::map<std::string, std::string>;

inline const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys{
        "input",     "clamp",           "seed",         "thickness", "dmax",       "lambda",
        "sigma_g",   "boundary_margin", "seed_spacing", "relabel_background", "auto", "max_steps",
        "out",       "report",          "strict",       "rng",       "reference",  "dataset",
        "dims",      "spacing"};
    return keys;
}

inline bool is_config_key(const std::string& k)
{
    const auto& keys = config_keys();
    return std::find(keys.begin(), keys.end(), k) != keys.end();
}

/// Parses `key = value` lines; `#` starts a comment. Unknown keys are rejected.
inline ConfigValues parse_config(std::istream& in, const std::string& name = "config")
{
    ConfigValues out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos)
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("config/syntax", name + ":" + std::to_string(lineno) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!is_config_key(key))
            throw Error("config/unknown-key", name + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (key == "seed" && out.count(key))
            out[key] += ";" + value;
        else
            out[key] = value;
    }
    return out;
}

inline ConfigValues read_config_file(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f)
        throw Error("config/io", "cannot read '" + path.string() + "'");
    return parse_config(f, path.string());
}

/// Values from CREASE_<KEY> environment variables (key upper-cased).
inline ConfigValues env_overrides(const std::function<const char*(const char*)>& getenv_fn = [](const char* k) {
    return std::getenv(k);
})
{
    ConfigValues out;
    for (const auto& k : config_keys()) {
        std::string name = "CREASE_" + k;
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
        if (const char* v = getenv_fn(name.c_str()))
            out[k] = v;
    }
    return out;
}

inline void merge_into(ConfigValues& base, const ConfigValues& over)
{
    for (const auto& [k, v] : over)
        base[k] = v;
}

inline std::vector<double> parse_numbers(const std::string& text, std::size_t expected, const std::string& what)
{
    std::vector<double> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos)
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error("config/invalid-value", what + ": '" + text + "' is not a number list");
        }
    }
    if (out.size() != expected)
        throw Error("config/invalid-value",
                    what + ": expected " + std::to_string(expected) + " comma-separated numbers, got '" + text + "'");
    return out;
}

inline double parse_number(const std::string& text, const std::string& what)
{
    return parse_numbers(text, 1, what)[0];
}

inline bool parse_bool(const std::string& text, const std::string& what)
{
    if (text == "1" || text == "true" || text == "yes" || text == "on")
        return true;
    if (text == "0" || text == "false" || text == "no" || text == "off")
        return false;
    throw Error("config/invalid-value", what + ": '" + text + "' is not a boolean");
}

inline Index3 parse_voxel(const std::string& text)
{
    const auto v = parse_numbers(text, 3, "seed");
    Index3 q{};
    for (int a = 0; a < 3; ++a) {
        if (v[a] != std::floor(v[a]))
            throw Error("config/invalid-value", "seed coordinates must be integers: '" + text + "'");
        q[a] = static_cast<int>(v[a]);
    }
    return q;
}

/// Seeds separated by ';'.
inline std::vector<Index3> parse_seed_list(const std::string& text)
{
    std::vector<Index3> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ';'))
        if (item.find_first_not_of(" \t") != std::string::npos)
            out.push_back(parse_voxel(item));
    return out;
}

/// Applies one session-level key; returns false for keys that are not session settings.
inline bool apply_session_key(SessionConfig& cfg, const std::string& key, const std::string& value)
{
    if (key == "thickness")
        cfg.thickness = parse_number(value, key);
    else if (key == "dmax")
        cfg.d_max = parse_number(value, key);
    else if (key == "lambda")
        cfg.lambda = parse_number(value, key);
    else if (key == "sigma_g")
        cfg.sigma_g = parse_number(value, key);
    else if (key == "boundary_margin")
        cfg.boundary_margin_frac = parse_number(value, key);
    else if (key == "seed_spacing")
        cfg.seed_spacing_frac = parse_number(value, key);
    else if (key == "relabel_background")
        cfg.relabel_background = parse_bool(value, key);
    else
        return false;
    if (!(cfg.thickness > 0) || cfg.d_max < 0 || cfg.lambda < 0 || cfg.sigma_g < 0 ||
        !(cfg.boundary_margin_frac >= 0) || !(cfg.seed_spacing_frac > 0))
        throw Error("config/invalid-value", key + ": value out of range: '" + value + "'");
    return true;
}

inline SessionConfig session_config_from(const ConfigValues& values)
{
    SessionConfig cfg;
    for (const auto& [k, v] : values)
        apply_session_key(cfg, k, v);
    return cfg;
}

} // namespace crease
