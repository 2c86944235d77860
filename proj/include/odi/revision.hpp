#pragma once

// Venue revision models and revised second-innings targets.
//
// With C = P(BF | W) / P(BS | W) for a venue, the revised target Xs for a
// first-innings score Xf satisfies
//
//     P(S > Xs | BS, W) = C * P(S > Xf | BF, W)
//
// and is obtained by inverting the bat-second-win CDF at
// q = 1 - C * P(S > Xf | BF, W).

#include <cstdint>
#include <future>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "odi/distfit.hpp"
#include "odi/error.hpp"
#include "odi/match_data.hpp"

namespace odi {

inline const std::vector<std::int64_t> kDefaultTargetGrid = {300, 315, 330, 340, 350};

/// Scores below this are outside the regime the revision is meant for.
inline constexpr std::int64_t kHighTargetThreshold = 300;

struct RevisionConfig {
    NbFitConfig fit;
    std::int64_t quantile_cap = kDefaultQuantileCap;
};

struct RevisionModel {
    std::string venue;
    double c_ratio = 1.0;
    std::size_t bat_first_wins = 0;
    std::size_t bat_second_wins = 0;
    FittedDist dist_bf_win;
    FittedDist dist_bs_win;

    Family family() const { return dist_bf_win.family(); }
};

/// Assembles a model from already fitted distributions.
inline RevisionModel make_model(std::string venue, double c_ratio, FittedDist bf_win, FittedDist bs_win) {
    if (!(c_ratio > 0) || !std::isfinite(c_ratio)) throw Error(ErrorKind::InvalidParams, "c_ratio must be positive");
    if (bf_win.family() != bs_win.family())
        throw Error(ErrorKind::InvalidParams, "bat-first and bat-second fits must share a family");
    require_valid(bf_win.params);
    require_valid(bs_win.params);
    RevisionModel m;
    m.venue = std::move(venue);
    m.c_ratio = c_ratio;
    m.dist_bf_win = std::move(bf_win);
    m.dist_bs_win = std::move(bs_win);
    return m;
}

/// Fits the bat-first-win and bat-second-win samples of `venue` ("overall"
/// for the pooled data) and takes C from the raw win counts.
inline RevisionModel build_model(const CategorizedDataset& ds, std::string_view venue, Family family,
                                 const RevisionConfig& cfg = {}) {
    const VenueCases* v = ds.find(venue);
    if (!v) throw Error(ErrorKind::UnknownVenue, fmt::format("unknown venue '{}'", venue));
    const auto bfw = v->bat_first_wins();
    const auto bsw = v->bat_second_wins();
    const auto need = std::max<std::size_t>(cfg.fit.min_sample, 1);
    if (bfw < need || bsw < need)
        throw Error(ErrorKind::InsufficientSample,
                    fmt::format("venue '{}': {} bat-first wins, {} bat-second wins (minimum {})", v->venue, bfw, bsw,
                                need));
    RevisionModel m = make_model(v->venue, static_cast<double>(bfw) / static_cast<double>(bsw),
                                 fit(family, (*v)[CaseLabel::BatFirstWin], cfg.fit),
                                 fit(family, (*v)[CaseLabel::BatSecondWin], cfg.fit));
    m.bat_first_wins = bfw;
    m.bat_second_wins = bsw;
    return m;
}

struct RevisedTarget {
    std::int64_t actual_target = 0;  ///< Xf, the first-innings score
    std::int64_t revised_target = 0; ///< Xs; the chase wins by exceeding it
    Family family = Family::NegBin;
    double q_internal = 0.0; ///< 1 - C * P(S > Xf | BF, W)
    bool capped = false;

    bool operator==(const RevisedTarget&) const = default;
};

inline RevisedTarget revise_target(const RevisionModel& m, std::int64_t xf,
                                   std::int64_t quantile_cap = kDefaultQuantileCap) {
    if (xf < 0) throw Error(ErrorKind::InvalidParams, "first-innings score must be non-negative");
    const double q = 1.0 - m.c_ratio * survival(m.dist_bf_win, xf);
    if (!(q > 0.0))
        throw Error(ErrorKind::TargetUnattainable,
                    fmt::format("venue '{}', Xf={}: C * P(S > Xf) = {} exceeds 1", m.venue, xf, 1.0 - q));
    auto xs = quantile(m.dist_bs_win, q, quantile_cap);
    return {xf, xs.score, m.family(), q, xs.capped};
}

struct BiasReport {
    std::string venue;
    Family family = Family::NegBin;
    std::vector<RevisedTarget> targets;
    std::int64_t total_difference = 0; ///< sum of (Xf - Xs) over the grid
};

inline BiasReport bias_total(const RevisionModel& m, const std::vector<std::int64_t>& grid = kDefaultTargetGrid,
                             std::int64_t quantile_cap = kDefaultQuantileCap) {
    BiasReport r;
    r.venue = m.venue;
    r.family = m.family();
    for (auto xf : grid) {
        r.targets.push_back(revise_target(m, xf, quantile_cap));
        r.total_difference += xf - r.targets.back().revised_target;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Full report

struct FamilyRevision {
    Family family = Family::NegBin;
    std::string status = "ok"; ///< "ok" or "<ErrorKind>: detail"
    std::optional<BiasReport> bias;
};

struct VenueRevision {
    std::string venue;
    std::string status = "ok";
    std::vector<FamilyRevision> families;
};

struct Table2Report {
    std::vector<std::int64_t> target_grid;
    std::vector<Family> families;
    std::vector<VenueRevision> rows; ///< venues in sorted order, overall last
    std::string note;
};

inline VenueRevision revise_venue(const CategorizedDataset& ds, const std::string& venue,
                                  const std::vector<Family>& families, const std::vector<std::int64_t>& grid,
                                  const RevisionConfig& cfg) {
    VenueRevision row;
    row.venue = venue;
    for (auto fam : families) {
        FamilyRevision fr;
        fr.family = fam;
        try {
            fr.bias = bias_total(build_model(ds, venue, fam, cfg), grid, cfg.quantile_cap);
        } catch (const Error& e) {
            fr.status = e.what();
            if (row.status == "ok") row.status = std::string(to_string(e.kind()));
        }
        row.families.push_back(std::move(fr));
    }
    return row;
}

/// Revised targets for every venue (or the `venues` subset) and the pooled
/// overall model. Venues whose fits fail are kept with a status instead of
/// being dropped. Venue work runs concurrently; ordering is fixed.
inline Table2Report table2(const CategorizedDataset& ds, const std::vector<Family>& families = {kAllFamilies.begin(), kAllFamilies.end()},
                           const std::vector<std::int64_t>& grid = kDefaultTargetGrid, const RevisionConfig& cfg = {},
                           const std::vector<std::string>& venues = {}) {
    Table2Report rep;
    rep.target_grid = grid;
    rep.families = families;

    std::vector<std::string> names;
    if (venues.empty()) {
        names = ds.venue_names();
        if (ds.overall().decisive_matches() > 0) names.emplace_back(kOverallVenue);
    } else {
        for (const auto& [key, v] : ds.venues())
            for (const auto& want : venues)
                if (venue_key(want) == key) {
                    names.push_back(v.venue);
                    break;
                }
        for (const auto& want : venues)
            if (venue_key(want) == kOverallVenue) {
                names.emplace_back(kOverallVenue);
                break;
            }
        for (const auto& want : venues)
            if (!ds.find(want)) rep.note += fmt::format("unknown venue '{}' skipped; ", want);
    }

    std::vector<std::future<VenueRevision>> jobs;
    for (const auto& name : names)
        jobs.push_back(std::async(std::launch::async, revise_venue, std::cref(ds), name, std::cref(families),
                                  std::cref(grid), std::cref(cfg)));
    for (auto& j : jobs) rep.rows.push_back(j.get());

    if (rep.rows.empty()) rep.note += "no venues with decisive matches";
    for (const auto& r : rep.rows)
        if (r.status != "ok") rep.note += fmt::format("{}: {}; ", r.venue, r.status);
    while (!rep.note.empty() && (rep.note.back() == ' ' || rep.note.back() == ';')) rep.note.pop_back();
    return rep;
}

// ---------------------------------------------------------------------------
// Output

inline nlohmann::json revised_json(const RevisedTarget& t, std::string_view venue) {
    return {{"venue", venue},
            {"family", to_string(t.family)},
            {"Xf", t.actual_target},
            {"Xs", t.revised_target},
            {"q_internal", t.q_internal},
            {"status", t.capped ? "capped" : "ok"}};
}

inline void write_revised_csv(std::ostream& out, const std::vector<std::pair<std::string, RevisedTarget>>& rows) {
    out << "venue,family,Xf,Xs,q_internal,status\n";
    for (const auto& [venue, t] : rows)
        out << csv::quote(venue) << ',' << to_string(t.family) << ',' << t.actual_target << ',' << t.revised_target
            << ',' << fmt::format("{}", t.q_internal) << ',' << (t.capped ? "capped" : "ok") << '\n';
}

/// Two CSV sections separated by a blank line: the per-target rows
/// (venue,family,Xf,Xs,q_internal,status) and the bias totals
/// (venue,total_<family>...,status).
inline void write_table2_csv(std::ostream& out, const Table2Report& rep) {
    out << "venue,family,Xf,Xs,q_internal,status\n";
    for (const auto& row : rep.rows) {
        for (const auto& fr : row.families) {
            if (!fr.bias) {
                out << csv::quote(row.venue) << ',' << to_string(fr.family) << ",,,," << csv::quote(fr.status) << '\n';
                continue;
            }
            for (const auto& t : fr.bias->targets)
                out << csv::quote(row.venue) << ',' << to_string(t.family) << ',' << t.actual_target << ','
                    << t.revised_target << ',' << fmt::format("{}", t.q_internal) << ','
                    << (t.capped ? "capped" : "ok") << '\n';
        }
    }
    out << '\n' << "venue";
    for (auto f : rep.families) out << ",total_" << short_name(f);
    out << ",status\n";
    for (const auto& row : rep.rows) {
        out << csv::quote(row.venue);
        for (const auto& fr : row.families) {
            out << ',';
            if (fr.bias) out << fr.bias->total_difference;
        }
        out << ',' << csv::quote(row.status) << '\n';
    }
}

inline nlohmann::json table2_json(const Table2Report& rep) {
    nlohmann::json j;
    j["target_grid"] = rep.target_grid;
    j["note"] = rep.note;
    auto rows = nlohmann::json::array();
    for (const auto& row : rep.rows) {
        auto fams = nlohmann::json::array();
        for (const auto& fr : row.families) {
            nlohmann::json f{{"family", to_string(fr.family)}, {"status", fr.status}};
            if (fr.bias) {
                auto ts = nlohmann::json::array();
                for (const auto& t : fr.bias->targets) ts.push_back(revised_json(t, row.venue));
                f["targets"] = ts;
                f["total_difference"] = fr.bias->total_difference;
            } else {
                f["targets"] = nlohmann::json::array();
                f["total_difference"] = nullptr;
            }
            fams.push_back(f);
        }
        rows.push_back({{"venue", row.venue}, {"status", row.status}, {"families", fams}});
    }
    j["venues"] = rows;
    return j;
}

} // namespace odi
