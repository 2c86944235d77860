#pragma once

// Application configuration: defaults, a flat key=value file, and flag
// overrides applied in that order.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "odi/csv.hpp"
#include "odi/distfit.hpp"
#include "odi/error.hpp"
#include "odi/revision.hpp"

namespace odi {

enum class OutputFormat { Csv, Json };

struct AppConfig {
    std::string data_path;
    std::vector<std::string> venues;
    Family family = Family::NegBin;
    std::vector<std::int64_t> target_grid = kDefaultTargetGrid;
    std::size_t min_sample_size = kDefaultMinSample;
    std::int64_t quantile_cap = kDefaultQuantileCap;
    OutputFormat output_format = OutputFormat::Csv;
    std::uint64_t seed = 0;
    std::string out_path;
    std::int64_t curve_max = 600;
    std::uint64_t trials = 1'000'000;

    RevisionConfig revision() const {
        RevisionConfig rc;
        rc.fit.min_sample = min_sample_size;
        rc.quantile_cap = quantile_cap;
        return rc;
    }
};

/// Keys accepted in config files; each matches the long flag of the same
/// name with '_' for '-'.
inline const std::vector<std::string_view> kConfigKeys = {"data",         "venues", "family", "target_grid",
                                                         "min_sample_size", "quantile_cap", "format", "seed",
                                                         "out",          "curve_max", "trials"};

namespace detail {

template <typename T>
T parse_number(std::string_view key, std::string_view s) {
    s = csv::trim(s);
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw Error(ErrorKind::InvalidConfig, fmt::format("{}: '{}' is not a valid number", key, s));
    return v;
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto pos = s.find(',', start);
        auto item = csv::trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (!item.empty()) out.emplace_back(item);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

} // namespace detail

inline void apply_setting(AppConfig& cfg, std::string_view key, std::string_view value) {
    value = csv::trim(value);
    if (key == "data") {
        cfg.data_path = std::string(value);
    } else if (key == "venues") {
        cfg.venues = detail::split_list(value);
    } else if (key == "family") {
        auto f = parse_family(value);
        if (!f) throw Error(ErrorKind::InvalidConfig, fmt::format("family: unknown '{}'", value));
        cfg.family = *f;
    } else if (key == "target_grid") {
        cfg.target_grid.clear();
        for (const auto& item : detail::split_list(value))
            cfg.target_grid.push_back(detail::parse_number<std::int64_t>(key, item));
        if (cfg.target_grid.empty()) throw Error(ErrorKind::InvalidConfig, "target_grid: empty");
    } else if (key == "min_sample_size") {
        cfg.min_sample_size = detail::parse_number<std::size_t>(key, value);
    } else if (key == "quantile_cap") {
        cfg.quantile_cap = detail::parse_number<std::int64_t>(key, value);
        if (cfg.quantile_cap < 1) throw Error(ErrorKind::InvalidConfig, "quantile_cap must be positive");
    } else if (key == "format") {
        if (value == "csv") cfg.output_format = OutputFormat::Csv;
        else if (value == "json") cfg.output_format = OutputFormat::Json;
        else throw Error(ErrorKind::InvalidConfig, fmt::format("format: expected csv or json, got '{}'", value));
    } else if (key == "seed") {
        cfg.seed = detail::parse_number<std::uint64_t>(key, value);
    } else if (key == "out") {
        cfg.out_path = std::string(value);
    } else if (key == "curve_max") {
        cfg.curve_max = detail::parse_number<std::int64_t>(key, value);
        if (cfg.curve_max < 0) throw Error(ErrorKind::InvalidConfig, "curve_max must be non-negative");
    } else if (key == "trials") {
        cfg.trials = detail::parse_number<std::uint64_t>(key, value);
        if (cfg.trials < 1) throw Error(ErrorKind::InvalidConfig, "trials must be at least 1");
    } else {
        throw Error(ErrorKind::InvalidConfig, fmt::format("unknown setting '{}'", key));
    }
}

/// Parses key=value lines. '#' starts a comment; blank lines are ignored.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto t = csv::trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorKind::InvalidConfig, fmt::format("config line {}: expected key=value", lineno));
        out.emplace_back(std::string(csv::trim(t.substr(0, eq))), std::string(csv::trim(t.substr(eq + 1))));
    }
    return out;
}

inline void apply_config_text(AppConfig& cfg, std::string_view text) {
    for (const auto& [k, v] : parse_config_text(text)) apply_setting(cfg, k, v);
}

inline void apply_config_file(AppConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_text(cfg, ss.str());
}

/// Defaults, then the config file (if any), then flag values.
inline AppConfig resolve_config(const std::optional<std::string>& config_path,
                                const std::vector<std::pair<std::string, std::string>>& flags) {
    AppConfig cfg;
    if (config_path) apply_config_file(cfg, *config_path);
    for (const auto& [k, v] : flags) apply_setting(cfg, k, v);
    return cfg;
}

} // namespace odi
