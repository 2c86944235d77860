#pragma once

// Minimal RFC 4180 field handling: quoted fields, doubled quotes, no
// embedded newlines (one record per line).

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace odi::csv {

inline std::string_view trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

/// Splits one line into fields. Returns nullopt on an unterminated quote or
/// stray characters after a closing quote.
inline std::optional<std::vector<std::string>> split_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    std::size_t i = 0;
    const std::size_t n = line.size();
    while (true) {
        cur.clear();
        if (i < n && line[i] == '"') {
            ++i;
            bool closed = false;
            while (i < n) {
                if (line[i] == '"') {
                    if (i + 1 < n && line[i + 1] == '"') {
                        cur.push_back('"');
                        i += 2;
                    } else {
                        ++i;
                        closed = true;
                        break;
                    }
                } else {
                    cur.push_back(line[i++]);
                }
            }
            if (!closed) return std::nullopt;
            if (i < n && line[i] != ',') return std::nullopt;
        } else {
            while (i < n && line[i] != ',') {
                if (line[i] == '"') return std::nullopt;
                cur.push_back(line[i++]);
            }
        }
        fields.push_back(cur);
        if (i >= n) break;
        ++i; // comma
    }
    return fields;
}

inline bool needs_quoting(std::string_view field) {
    return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

inline std::string quote(std::string_view field) {
    if (!needs_quoting(field)) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

/// Filesystem-safe slug for per-venue output files.
inline std::string slug(std::string_view name) {
    std::string out;
    for (unsigned char c : name) {
        if (std::isalnum(c)) {
            out.push_back(static_cast<char>(std::tolower(c)));
        } else if (!out.empty() && out.back() != '_') {
            out.push_back('_');
        }
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out.empty() ? std::string("venue") : out;
}

} // namespace odi::csv
