#pragma once

// Match-record ingestion, four-case categorization and per-venue summaries.

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "odi/csv.hpp"
#include "odi/error.hpp"

namespace odi {

enum class Outcome { BatFirstWin, BatSecondWin, Tie, NoResult };

constexpr std::string_view to_string(Outcome o) noexcept {
    switch (o) {
    case Outcome::BatFirstWin: return "BatFirstWin";
    case Outcome::BatSecondWin: return "BatSecondWin";
    case Outcome::Tie: return "Tie";
    case Outcome::NoResult: return "NoResult";
    }
    return "";
}

inline std::optional<Outcome> parse_outcome(std::string_view s) {
    for (auto o : {Outcome::BatFirstWin, Outcome::BatSecondWin, Outcome::Tie, Outcome::NoResult})
        if (s == to_string(o)) return o;
    return std::nullopt;
}

struct MatchRecord {
    std::string match_id;
    std::string venue;
    std::optional<std::string> date;
    std::int64_t first_innings_runs = 0;
    std::int64_t second_innings_runs = 0;
    Outcome outcome = Outcome::NoResult;
    bool reduced_overs = false;

    bool operator==(const MatchRecord&) const = default;
};

/// Empty string when the record is consistent, otherwise the violated rule.
inline std::string outcome_violation(const MatchRecord& r) {
    switch (r.outcome) {
    case Outcome::BatSecondWin:
        if (r.second_innings_runs <= r.first_innings_runs)
            return "BatSecondWin requires second_innings_runs > first_innings_runs";
        break;
    case Outcome::BatFirstWin:
        if (r.second_innings_runs >= r.first_innings_runs)
            return "BatFirstWin requires second_innings_runs < first_innings_runs";
        break;
    case Outcome::Tie:
        if (r.second_innings_runs != r.first_innings_runs) return "Tie requires equal scores";
        break;
    case Outcome::NoResult: break;
    }
    return {};
}

enum class CaseLabel : std::size_t { BatFirstWin = 0, BatFirstLose = 1, BatSecondWin = 2, BatSecondLose = 3 };

inline constexpr std::array<CaseLabel, 4> kAllCases = {CaseLabel::BatFirstWin, CaseLabel::BatFirstLose,
                                                      CaseLabel::BatSecondWin, CaseLabel::BatSecondLose};

constexpr std::string_view to_string(CaseLabel c) noexcept {
    switch (c) {
    case CaseLabel::BatFirstWin: return "BatFirstWin";
    case CaseLabel::BatFirstLose: return "BatFirstLose";
    case CaseLabel::BatSecondWin: return "BatSecondWin";
    case CaseLabel::BatSecondLose: return "BatSecondLose";
    }
    return "";
}

inline std::optional<CaseLabel> parse_case_label(std::string_view s) {
    for (auto c : kAllCases)
        if (s == to_string(c)) return c;
    return std::nullopt;
}

inline constexpr std::string_view kOverallVenue = "overall";
inline constexpr std::string_view kMatchCsvHeader =
    "match_id,venue,date,first_innings_runs,second_innings_runs,outcome,reduced_overs";

/// Case-insensitive, whitespace-trimmed venue key.
inline std::string venue_key(std::string_view name) { return csv::lower(csv::trim(name)); }

// ---------------------------------------------------------------------------
// Parsing

struct RowDiagnostic {
    std::size_t line = 0; // 1-based; the header is line 1
    ErrorKind kind = ErrorKind::MalformedRow;
    std::string message;
};

/// Raised when any row is rejected. kind() is that of the first diagnostic;
/// all rejected rows are listed.
class ParseError : public Error {
public:
    explicit ParseError(std::vector<RowDiagnostic> diags)
        : Error(diags.empty() ? ErrorKind::MalformedRow : diags.front().kind, summarize(diags)),
          diags_(std::move(diags)) {}

    const std::vector<RowDiagnostic>& diagnostics() const noexcept { return diags_; }

private:
    static std::string summarize(const std::vector<RowDiagnostic>& diags) {
        std::string out = fmt::format("{} row(s) rejected", diags.size());
        for (const auto& d : diags) out += fmt::format("\n  line {}: {}: {}", d.line, to_string(d.kind), d.message);
        return out;
    }

    std::vector<RowDiagnostic> diags_;
};

namespace detail {

inline std::optional<std::int64_t> parse_runs(std::string_view s) {
    s = csv::trim(s);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || v < 0) return std::nullopt;
    return v;
}

inline bool valid_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (s[i] < '0' || s[i] > '9') return false;
    auto num = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        std::from_chars(s.data() + pos, s.data() + pos + len, v);
        return v;
    };
    std::chrono::year_month_day ymd{std::chrono::year{num(0, 4)},
                                    std::chrono::month{static_cast<unsigned>(num(5, 2))},
                                    std::chrono::day{static_cast<unsigned>(num(8, 2))}};
    return ymd.ok();
}

} // namespace detail

/// Parses match CSV text. The header must match kMatchCsvHeader exactly.
/// Throws ParseError listing every rejected row.
inline std::vector<MatchRecord> parse_matches(std::istream& in) {
    std::vector<MatchRecord> records;
    std::vector<RowDiagnostic> diags;
    std::set<std::string> seen_ids;

    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (!have_header) {
            if (line != kMatchCsvHeader) {
                throw ParseError({{lineno, ErrorKind::MalformedRow, "unexpected header: '" + line + "'"}});
            }
            have_header = true;
            continue;
        }
        if (csv::trim(line).empty()) continue;

        auto bad = [&](ErrorKind k, std::string msg) { diags.push_back({lineno, k, std::move(msg)}); };

        auto fields = csv::split_line(line);
        if (!fields) {
            bad(ErrorKind::MalformedRow, "unbalanced quoting");
            continue;
        }
        if (fields->size() != 7) {
            bad(ErrorKind::MalformedRow, fmt::format("expected 7 fields, got {}", fields->size()));
            continue;
        }
        const auto& f = *fields;
        MatchRecord r;
        r.match_id = std::string(csv::trim(f[0]));
        r.venue = std::string(csv::trim(f[1]));
        if (r.match_id.empty()) {
            bad(ErrorKind::MalformedRow, "empty match_id");
            continue;
        }
        if (r.venue.empty()) {
            bad(ErrorKind::MalformedRow, "empty venue");
            continue;
        }
        if (venue_key(r.venue) == kOverallVenue) {
            bad(ErrorKind::MalformedRow, "venue name 'overall' is reserved");
            continue;
        }
        auto date = csv::trim(f[2]);
        if (!date.empty()) {
            if (!detail::valid_iso_date(date)) {
                bad(ErrorKind::MalformedRow, "invalid date '" + std::string(date) + "'");
                continue;
            }
            r.date = std::string(date);
        }
        auto first = detail::parse_runs(f[3]);
        auto second = detail::parse_runs(f[4]);
        if (!first || !second) {
            bad(ErrorKind::MalformedRow, "innings runs must be non-negative integers");
            continue;
        }
        r.first_innings_runs = *first;
        r.second_innings_runs = *second;
        auto outcome = parse_outcome(csv::trim(f[5]));
        if (!outcome) {
            bad(ErrorKind::MalformedRow, "unknown outcome '" + f[5] + "'");
            continue;
        }
        r.outcome = *outcome;
        auto flag = csv::trim(f[6]);
        if (flag == "true") {
            r.reduced_overs = true;
        } else if (flag == "false") {
            r.reduced_overs = false;
        } else {
            bad(ErrorKind::MalformedRow, "reduced_overs must be true or false");
            continue;
        }
        if (auto why = outcome_violation(r); !why.empty()) {
            bad(ErrorKind::InconsistentOutcome, why);
            continue;
        }
        if (!seen_ids.insert(r.match_id).second) {
            bad(ErrorKind::DuplicateMatchId, "duplicate match_id '" + r.match_id + "'");
            continue;
        }
        records.push_back(std::move(r));
    }
    if (!have_header) throw ParseError({{0, ErrorKind::MalformedRow, "missing header"}});
    if (!diags.empty()) throw ParseError(std::move(diags));
    return records;
}

inline std::vector<MatchRecord> parse_matches(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_matches(in);
}

inline void write_matches(std::ostream& out, const std::vector<MatchRecord>& records) {
    out << kMatchCsvHeader << '\n';
    for (const auto& r : records) {
        out << csv::quote(r.match_id) << ',' << csv::quote(r.venue) << ',' << r.date.value_or("") << ','
            << r.first_innings_runs << ',' << r.second_innings_runs << ',' << to_string(r.outcome) << ','
            << (r.reduced_overs ? "true" : "false") << '\n';
    }
}

inline std::string serialize_matches(const std::vector<MatchRecord>& records) {
    std::ostringstream out;
    write_matches(out, records);
    return out.str();
}

// ---------------------------------------------------------------------------
// Categorization

/// The four case samples of one venue (or the pooled "overall" entry).
/// Scores within each sample are sorted ascending.
struct VenueCases {
    std::string venue;
    std::array<std::vector<std::int64_t>, 4> samples;

    const std::vector<std::int64_t>& operator[](CaseLabel c) const { return samples[static_cast<std::size_t>(c)]; }
    std::vector<std::int64_t>& operator[](CaseLabel c) { return samples[static_cast<std::size_t>(c)]; }

    std::size_t bat_first_wins() const { return (*this)[CaseLabel::BatFirstWin].size(); }
    std::size_t bat_second_wins() const { return (*this)[CaseLabel::BatSecondWin].size(); }
    std::size_t decisive_matches() const { return bat_first_wins() + bat_second_wins(); }

    bool operator==(const VenueCases&) const = default;
};

/// Immutable once built; lookups accept any capitalization/padding of a venue
/// name and the sentinel "overall".
class CategorizedDataset {
public:
    CategorizedDataset() { overall_.venue = std::string(kOverallVenue); }

    const VenueCases* find(std::string_view venue) const {
        auto key = venue_key(venue);
        if (key == kOverallVenue) return &overall_;
        auto it = venues_.find(key);
        return it == venues_.end() ? nullptr : &it->second;
    }

    const VenueCases& overall() const { return overall_; }

    /// Per-venue entries in sorted key order (excludes "overall").
    const std::map<std::string, VenueCases>& venues() const { return venues_; }

    std::vector<std::string> venue_names() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : venues_) out.push_back(v.venue);
        return out;
    }

    bool operator==(const CategorizedDataset&) const = default;

private:
    friend CategorizedDataset categorize(const std::vector<MatchRecord>&);
    std::map<std::string, VenueCases> venues_;
    VenueCases overall_;
};

/// Excludes ties, no-results and reduced-overs matches. Every remaining match
/// contributes its first-innings score to BatFirstWin/BatFirstLose and its
/// second-innings score to BatSecondLose/BatSecondWin.
inline CategorizedDataset categorize(const std::vector<MatchRecord>& records) {
    CategorizedDataset ds;
    auto add = [](VenueCases& v, const MatchRecord& r) {
        if (r.outcome == Outcome::BatFirstWin) {
            v[CaseLabel::BatFirstWin].push_back(r.first_innings_runs);
            v[CaseLabel::BatSecondLose].push_back(r.second_innings_runs);
        } else {
            v[CaseLabel::BatFirstLose].push_back(r.first_innings_runs);
            v[CaseLabel::BatSecondWin].push_back(r.second_innings_runs);
        }
    };
    for (const auto& r : records) {
        auto key = venue_key(r.venue);
        auto& entry = ds.venues_[key];
        auto name = std::string(csv::trim(r.venue));
        if (entry.venue.empty() || name < entry.venue) entry.venue = name;
        bool decisive = r.outcome == Outcome::BatFirstWin || r.outcome == Outcome::BatSecondWin;
        if (!decisive || r.reduced_overs) continue;
        add(entry, r);
        add(ds.overall_, r);
    }
    auto sort_all = [](VenueCases& v) {
        for (auto& s : v.samples) std::sort(s.begin(), s.end());
    };
    for (auto& [k, v] : ds.venues_) sort_all(v);
    sort_all(ds.overall_);
    return ds;
}

// ---------------------------------------------------------------------------
// Summaries

struct SummaryRow {
    std::string venue;
    std::size_t total_matches = 0;
    double pct_bat_first_win = 0;
    std::optional<double> avg_bat_first_win;
    std::optional<double> avg_bat_second_lose;
    double pct_bat_second_win = 0;
    std::optional<double> avg_bat_second_win;
    std::optional<double> avg_bat_first_lose;
};

inline std::optional<double> mean_of(const std::vector<std::int64_t>& xs) {
    if (xs.empty()) return std::nullopt;
    double sum = 0;
    for (auto x : xs) sum += static_cast<double>(x);
    return sum / static_cast<double>(xs.size());
}

inline SummaryRow summarize_venue(const VenueCases& v) {
    if (v.decisive_matches() == 0) throw Error(ErrorKind::EmptyVenue, "venue '" + v.venue + "' has no decisive matches");
    SummaryRow row;
    row.venue = v.venue;
    row.total_matches = v.decisive_matches();
    const auto total = static_cast<double>(row.total_matches);
    row.pct_bat_first_win = 100.0 * static_cast<double>(v.bat_first_wins()) / total;
    row.pct_bat_second_win = 100.0 * static_cast<double>(v.bat_second_wins()) / total;
    row.avg_bat_first_win = mean_of(v[CaseLabel::BatFirstWin]);
    row.avg_bat_second_lose = mean_of(v[CaseLabel::BatSecondLose]);
    row.avg_bat_second_win = mean_of(v[CaseLabel::BatSecondWin]);
    row.avg_bat_first_lose = mean_of(v[CaseLabel::BatFirstLose]);
    return row;
}

/// Rows for the requested venues (all venues when empty) followed by the
/// overall row. Requested venues must exist and have decisive matches;
/// unfiltered summaries skip venues with none.
inline std::vector<SummaryRow> summarize(const CategorizedDataset& ds, const std::vector<std::string>& venues = {}) {
    std::vector<SummaryRow> rows;
    if (venues.empty()) {
        for (const auto& [k, v] : ds.venues())
            if (v.decisive_matches() > 0) rows.push_back(summarize_venue(v));
        if (ds.overall().decisive_matches() > 0) rows.push_back(summarize_venue(ds.overall()));
        return rows;
    }
    std::set<std::string> wanted;
    for (const auto& name : venues) {
        const auto* v = ds.find(name);
        if (!v) throw Error(ErrorKind::UnknownVenue, "unknown venue '" + name + "'");
        wanted.insert(venue_key(name));
    }
    for (const auto& [k, v] : ds.venues())
        if (wanted.count(k)) rows.push_back(summarize_venue(v));
    if (wanted.count(std::string(kOverallVenue))) rows.push_back(summarize_venue(ds.overall()));
    return rows;
}

/// Nearest integer, halves away from zero.
inline long long display_round(double x) { return std::llround(x); }

inline std::string format_pct(double pct) { return fmt::format("{:.1f}", std::round(pct * 10.0) / 10.0); }

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    auto avg = [](const std::optional<double>& a) { return a ? std::to_string(display_round(*a)) : std::string(); };
    out << "venue,total_matches,pct_bat_first_win,avg_bat_first_win,avg_bat_second_lose,"
           "pct_bat_second_win,avg_bat_second_win,avg_bat_first_lose\n";
    for (const auto& r : rows) {
        out << csv::quote(r.venue) << ',' << r.total_matches << ',' << format_pct(r.pct_bat_first_win) << ','
            << avg(r.avg_bat_first_win) << ',' << avg(r.avg_bat_second_lose) << ','
            << format_pct(r.pct_bat_second_win) << ',' << avg(r.avg_bat_second_win) << ','
            << avg(r.avg_bat_first_lose) << '\n';
    }
}

/// Same columns as the CSV but at full precision; missing averages are null.
inline nlohmann::json summary_json(const std::vector<SummaryRow>& rows) {
    auto opt = [](const std::optional<double>& a) { return a ? nlohmann::json(*a) : nlohmann::json(nullptr); };
    auto arr = nlohmann::json::array();
    for (const auto& r : rows) {
        arr.push_back({{"venue", r.venue},
                       {"total_matches", r.total_matches},
                       {"pct_bat_first_win", r.pct_bat_first_win},
                       {"avg_bat_first_win", opt(r.avg_bat_first_win)},
                       {"avg_bat_second_lose", opt(r.avg_bat_second_lose)},
                       {"pct_bat_second_win", r.pct_bat_second_win},
                       {"avg_bat_second_win", opt(r.avg_bat_second_win)},
                       {"avg_bat_first_lose", opt(r.avg_bat_first_lose)}});
    }
    return arr;
}

} // namespace odi
