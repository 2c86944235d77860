#pragma once

// Seeded Monte Carlo: score sampling, empirical check of the revision
// identity, and synthetic match datasets.
//
// Random numbers come from SplitMix64 evaluated in counter mode: draw i of
// stream s under seed k is mix(key(k, s) + (i + 1) * golden). Any partition
// of the counters across workers reproduces the same draws.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "odi/distfit.hpp"
#include "odi/error.hpp"
#include "odi/match_data.hpp"
#include "odi/revision.hpp"

namespace odi {

// ---------------------------------------------------------------------------
// Counter-based RNG

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class CounterStream {
public:
    constexpr CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_(splitmix64_mix(seed + kGolden) ^ splitmix64_mix(stream * kGolden + 0x632BE59BD9B4E019ULL)) {}

    constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
        return splitmix64_mix(key_ + (counter + 1) * kGolden);
    }

    /// Uniform in the open interval (0, 1).
    constexpr double uniform(std::uint64_t counter) const noexcept {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1p-53;
    }

private:
    std::uint64_t key_;
};

// ---------------------------------------------------------------------------
// Sampling

/// Inverse-CDF sampler. NegBin uses a precomputed CDF table and binary
/// search; continuous draws are rounded to the nearest non-negative integer.
class ScoreSampler {
public:
    explicit ScoreSampler(const FittedDist& d) : dist_(d) {
        require_valid(d.params);
        if (const auto* nb = std::get_if<NegBinParams>(&d.params)) {
            detail::NbTerms t(*nb);
            const double mu = nb->mean();
            double acc = 0.0;
            for (std::int64_t k = 0;; ++k) {
                const double pk = t.pmf(k);
                acc += pk;
                if (acc >= 1.0) acc = 1.0;
                table_.push_back(acc);
                if (acc >= 1.0 || (static_cast<double>(k) > mu && pk < 1e-18) || k >= 10'000'000) break;
            }
        }
    }

    std::int64_t draw(double u) const {
        return std::visit(
            [&](const auto& prm) -> std::int64_t {
                using T = std::decay_t<decltype(prm)>;
                if constexpr (std::is_same_v<T, NegBinParams>) {
                    auto it = std::lower_bound(table_.begin(), table_.end(), u);
                    return static_cast<std::int64_t>(it - table_.begin());
                } else {
                    double x = 0.0;
                    if constexpr (std::is_same_v<T, NormalParams>)
                        x = prm.mu - prm.sigma * detail::kSqrt2 * boost::math::erfc_inv(2.0 * u);
                    else
                        x = prm.mu + prm.s * std::log(u / (1.0 - u));
                    return std::max<std::int64_t>(0, std::llround(x));
                }
            },
            dist_.params);
    }

private:
    FittedDist dist_;
    std::vector<double> table_;
};

inline std::vector<std::int64_t> sample_scores(const FittedDist& d, std::size_t count, std::uint64_t seed,
                                               std::uint64_t stream = 0) {
    ScoreSampler sampler(d);
    CounterStream rng(seed, stream);
    std::vector<std::int64_t> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(sampler.draw(rng.uniform(i)));
    return out;
}

// ---------------------------------------------------------------------------
// Equalization check

struct SimConfig {
    std::uint64_t seed = 0;
    std::uint64_t n_trials = 1'000'000;
    RevisionModel model;
    std::int64_t xf = 300;
    std::int64_t quantile_cap = kDefaultQuantileCap;
    unsigned workers = 0; ///< 0: hardware concurrency
};

struct SimResult {
    std::string venue;
    Family family = Family::NegBin;
    std::int64_t xf = 0;
    std::int64_t xs = 0;
    double c_ratio = 0.0;
    double q_internal = 0.0;
    std::uint64_t trials = 0;
    double est_survival_bfw_at_xf = 0.0;
    double se_bfw = 0.0;
    double est_survival_bsw_at_xs = 0.0;
    double se_bsw = 0.0;
    double analytic_survival_bfw = 0.0;
    double analytic_survival_bsw = 0.0;
    double step_mass_bsw = 0.0; ///< mass of the integer step at Xs
    double combined_se = 0.0;   ///< SE of est_bsw - C * est_bfw
    double discrepancy = 0.0;   ///< |est_bsw - C * est_bfw|
    bool consistent = false;    ///< discrepancy <= 4 * combined_se + step_mass_bsw
    bool degenerate = false;    ///< an estimate sits at 0 or 1, so its SE is 0

    bool operator==(const SimResult&) const = default;
};

inline constexpr std::uint64_t kStreamBatFirst = 1;
inline constexpr std::uint64_t kStreamBatSecond = 2;

inline SimResult check_equalization(const SimConfig& cfg) {
    if (cfg.n_trials < 1) throw Error(ErrorKind::InvalidConfig, "n_trials must be at least 1");
    const auto rt = revise_target(cfg.model, cfg.xf, cfg.quantile_cap);

    const ScoreSampler bf(cfg.model.dist_bf_win);
    const ScoreSampler bs(cfg.model.dist_bs_win);
    const CounterStream rng_bf(cfg.seed, kStreamBatFirst);
    const CounterStream rng_bs(cfg.seed, kStreamBatSecond);

    unsigned workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, cfg.n_trials));
    std::vector<std::uint64_t> hits_bf(workers, 0), hits_bs(workers, 0);
    {
        std::vector<std::jthread> pool;
        const std::uint64_t chunk = (cfg.n_trials + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                const std::uint64_t begin = w * chunk;
                const std::uint64_t end = std::min(cfg.n_trials, begin + chunk);
                std::uint64_t a = 0, b = 0;
                for (std::uint64_t i = begin; i < end; ++i) {
                    a += bf.draw(rng_bf.uniform(i)) > cfg.xf;
                    b += bs.draw(rng_bs.uniform(i)) > rt.revised_target;
                }
                hits_bf[w] = a;
                hits_bs[w] = b;
            });
        }
    }
    std::uint64_t a = 0, b = 0;
    for (unsigned w = 0; w < workers; ++w) {
        a += hits_bf[w];
        b += hits_bs[w];
    }

    SimResult r;
    r.venue = cfg.model.venue;
    r.family = cfg.model.family();
    r.xf = cfg.xf;
    r.xs = rt.revised_target;
    r.c_ratio = cfg.model.c_ratio;
    r.q_internal = rt.q_internal;
    r.trials = cfg.n_trials;
    const double n = static_cast<double>(cfg.n_trials);
    r.est_survival_bfw_at_xf = static_cast<double>(a) / n;
    r.est_survival_bsw_at_xs = static_cast<double>(b) / n;
    r.se_bfw = std::sqrt(r.est_survival_bfw_at_xf * (1.0 - r.est_survival_bfw_at_xf) / n);
    r.se_bsw = std::sqrt(r.est_survival_bsw_at_xs * (1.0 - r.est_survival_bsw_at_xs) / n);
    r.analytic_survival_bfw = survival(cfg.model.dist_bf_win, cfg.xf);
    r.analytic_survival_bsw = survival(cfg.model.dist_bs_win, r.xs);
    r.step_mass_bsw = step_mass(cfg.model.dist_bs_win, r.xs);
    r.combined_se = std::sqrt(r.se_bsw * r.se_bsw + r.c_ratio * r.c_ratio * r.se_bfw * r.se_bfw);
    r.discrepancy = std::abs(r.est_survival_bsw_at_xs - r.c_ratio * r.est_survival_bfw_at_xf);
    r.consistent = r.discrepancy <= 4.0 * r.combined_se + r.step_mass_bsw;
    r.degenerate = r.se_bfw == 0.0 || r.se_bsw == 0.0;
    return r;
}

inline nlohmann::json sim_json(const SimResult& r) {
    return {{"venue", r.venue},
            {"family", to_string(r.family)},
            {"Xf", r.xf},
            {"Xs", r.xs},
            {"c_ratio", r.c_ratio},
            {"q_internal", r.q_internal},
            {"trials", r.trials},
            {"est_survival_bfw_at_Xf", r.est_survival_bfw_at_xf},
            {"se_bfw", r.se_bfw},
            {"est_survival_bsw_at_Xs", r.est_survival_bsw_at_xs},
            {"se_bsw", r.se_bsw},
            {"analytic_survival_bfw_at_Xf", r.analytic_survival_bfw},
            {"analytic_survival_bsw_at_Xs", r.analytic_survival_bsw},
            {"step_mass_bsw_at_Xs", r.step_mass_bsw},
            {"combined_se", r.combined_se},
            {"discrepancy", r.discrepancy},
            {"consistent", r.consistent},
            {"degenerate", r.degenerate}};
}

// ---------------------------------------------------------------------------
// Synthetic datasets

struct VenueSpec {
    std::string venue;
    std::array<std::size_t, 4> counts{};   ///< indexed by CaseLabel
    std::array<DistParams, 4> case_dists{}; ///< indexed by CaseLabel

    std::size_t count(CaseLabel c) const { return counts[static_cast<std::size_t>(c)]; }
    const DistParams& dist(CaseLabel c) const { return case_dists[static_cast<std::size_t>(c)]; }
};

struct SyntheticSpec {
    std::vector<VenueSpec> venues;
};

inline void validate_spec(const SyntheticSpec& spec) {
    std::set<std::string> keys;
    for (const auto& v : spec.venues) {
        auto key = venue_key(v.venue);
        if (key.empty() || key == kOverallVenue)
            throw Error(ErrorKind::InconsistentSpec, fmt::format("invalid venue name '{}'", v.venue));
        if (!keys.insert(key).second) throw Error(ErrorKind::InconsistentSpec, "duplicate venue '" + v.venue + "'");
        if (v.count(CaseLabel::BatFirstWin) != v.count(CaseLabel::BatSecondLose))
            throw Error(ErrorKind::InconsistentSpec,
                        fmt::format("venue '{}': BatFirstWin count {} != BatSecondLose count {}", v.venue,
                                    v.count(CaseLabel::BatFirstWin), v.count(CaseLabel::BatSecondLose)));
        if (v.count(CaseLabel::BatSecondWin) != v.count(CaseLabel::BatFirstLose))
            throw Error(ErrorKind::InconsistentSpec,
                        fmt::format("venue '{}': BatSecondWin count {} != BatFirstLose count {}", v.venue,
                                    v.count(CaseLabel::BatSecondWin), v.count(CaseLabel::BatFirstLose)));
        for (const auto& d : v.case_dists)
            if (!valid(d)) throw Error(ErrorKind::InconsistentSpec, "venue '" + v.venue + "': invalid distribution");
    }
}

namespace detail {

inline FittedDist as_dist(const DistParams& p) {
    FittedDist d;
    d.params = p;
    return d;
}

/// Sequential draws from one counter stream.
class DrawCursor {
public:
    DrawCursor(std::uint64_t seed, std::uint64_t stream) : rng_(seed, stream) {}
    double next() { return rng_.uniform(counter_++); }

private:
    CounterStream rng_;
    std::uint64_t counter_ = 0;
};

/// Winner drawn from its law; loser redrawn until strictly below it. A
/// winner with no feasible loser after `max_loser_tries` is itself redrawn.
inline std::pair<std::int64_t, std::int64_t> draw_pair(const ScoreSampler& winner, const ScoreSampler& loser,
                                                       DrawCursor& cur, const std::string& venue) {
    constexpr int max_loser_tries = 1000;
    constexpr int max_winner_tries = 10000;
    for (int wt = 0; wt < max_winner_tries; ++wt) {
        const auto w = winner.draw(cur.next());
        if (w == 0) continue;
        for (int lt = 0; lt < max_loser_tries; ++lt) {
            const auto l = loser.draw(cur.next());
            if (l < w) return {w, l};
        }
    }
    throw Error(ErrorKind::InconsistentSpec, "venue '" + venue + "': loser scores cannot be placed below winners");
}

} // namespace detail

/// Emits BatFirstWin matches then BatSecondWin matches for each venue. Each
/// venue draws from its own stream (seed, venue index), so venues are
/// independent of one another's counts.
inline std::vector<MatchRecord> generate_synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    std::vector<MatchRecord> out;
    for (std::size_t vi = 0; vi < spec.venues.size(); ++vi) {
        const auto& v = spec.venues[vi];
        detail::DrawCursor cur(seed, 1000 + vi);
        const std::string slug = csv::slug(v.venue);
        std::array<ScoreSampler, 4> samplers = {
            ScoreSampler(detail::as_dist(v.dist(CaseLabel::BatFirstWin))),
            ScoreSampler(detail::as_dist(v.dist(CaseLabel::BatFirstLose))),
            ScoreSampler(detail::as_dist(v.dist(CaseLabel::BatSecondWin))),
            ScoreSampler(detail::as_dist(v.dist(CaseLabel::BatSecondLose))),
        };
        auto sampler = [&](CaseLabel c) -> const ScoreSampler& { return samplers[static_cast<std::size_t>(c)]; };

        std::size_t idx = 0;
        for (std::size_t i = 0; i < v.count(CaseLabel::BatFirstWin); ++i) {
            auto [w, l] = detail::draw_pair(sampler(CaseLabel::BatFirstWin), sampler(CaseLabel::BatSecondLose), cur,
                                            v.venue);
            out.push_back({fmt::format("syn-{}-{}", slug, ++idx), v.venue, std::nullopt, w, l, Outcome::BatFirstWin,
                           false});
        }
        for (std::size_t i = 0; i < v.count(CaseLabel::BatSecondWin); ++i) {
            auto [w, l] = detail::draw_pair(sampler(CaseLabel::BatSecondWin), sampler(CaseLabel::BatFirstLose), cur,
                                            v.venue);
            out.push_back({fmt::format("syn-{}-{}", slug, ++idx), v.venue, std::nullopt, l, w, Outcome::BatSecondWin,
                           false});
        }
    }
    return out;
}

/// A spec that reproduces a dataset's case counts, with each case law fitted
/// by `family`. Venues failing the fit are skipped and named in `skipped`.
inline SyntheticSpec spec_from_dataset(const CategorizedDataset& ds, Family family, const NbFitConfig& cfg,
                                       std::vector<std::string>* skipped = nullptr) {
    SyntheticSpec spec;
    for (const auto& [key, v] : ds.venues()) {
        try {
            VenueSpec vs;
            vs.venue = v.venue;
            for (auto c : kAllCases) {
                vs.counts[static_cast<std::size_t>(c)] = v[c].size();
                vs.case_dists[static_cast<std::size_t>(c)] = fit(family, v[c], cfg).params;
            }
            spec.venues.push_back(std::move(vs));
        } catch (const Error& e) {
            if (skipped) skipped->push_back(v.venue + ": " + e.what());
        }
    }
    return spec;
}

/// Ten venues at realistic ODI scoring levels, NegBin laws with dispersion
/// 20 and per-case means; counts pair up by construction.
inline SyntheticSpec demo_spec() {
    struct Row {
        const char* venue;
        std::size_t bf_wins, bs_wins;
        double m_bfw, m_bsl, m_bsw, m_bfl;
    };
    static constexpr Row rows[] = {
        {"Auckland", 30, 41, 240, 185, 200, 203},  {"Bangalore", 11, 11, 294, 248, 236, 234},
        {"Harare", 74, 75, 255, 183, 205, 204},    {"Lahore", 33, 25, 266, 205, 233, 231},
        {"Lords", 30, 32, 268, 215, 218, 217},     {"Melbourne", 72, 73, 245, 191, 202, 201},
        {"Mirpur", 50, 57, 261, 194, 203, 204},    {"Premadasa", 69, 49, 266, 196, 204, 203},
        {"Sharjah", 127, 109, 252, 189, 195, 192}, {"Sydney", 88, 61, 248, 189, 195, 198},
    };
    constexpr double n = 20.0;
    auto nb = [&](double m) { return DistParams{NegBinParams{n, n / (n + m)}}; };
    SyntheticSpec spec;
    for (const auto& r : rows) {
        VenueSpec v;
        v.venue = r.venue;
        v.counts = {r.bf_wins, r.bs_wins, r.bs_wins, r.bf_wins};
        v.case_dists = {nb(r.m_bfw), nb(r.m_bfl), nb(r.m_bsw), nb(r.m_bsl)};
        spec.venues.push_back(std::move(v));
    }
    return spec;
}

inline nlohmann::json spec_json(const SyntheticSpec& spec) {
    auto venues = nlohmann::json::array();
    for (const auto& v : spec.venues) {
        nlohmann::json counts, cases;
        for (auto c : kAllCases) {
            counts[std::string(to_string(c))] = v.count(c);
            cases[std::string(to_string(c))] = {{"family", to_string(static_cast<Family>(v.dist(c).index()))},
                                                {"params", params_json(v.dist(c))}};
        }
        venues.push_back({{"venue", v.venue}, {"counts", counts}, {"cases", cases}});
    }
    return {{"venues", venues}};
}

inline SyntheticSpec spec_from_json(const nlohmann::json& j) {
    try {
        SyntheticSpec spec;
        for (const auto& jv : j.at("venues")) {
            VenueSpec v;
            v.venue = jv.at("venue").get<std::string>();
            for (auto c : kAllCases) {
                const auto name = std::string(to_string(c));
                v.counts[static_cast<std::size_t>(c)] = jv.at("counts").at(name).get<std::size_t>();
                nlohmann::json rec = jv.at("cases").at(name);
                rec["venue"] = v.venue;
                rec["case"] = name;
                rec["sample_size"] = 0;
                rec["log_likelihood"] = 0.0;
                rec["degenerate_flag"] = false;
                v.case_dists[static_cast<std::size_t>(c)] = fitted_from_json(rec).dist.params;
            }
            spec.venues.push_back(std::move(v));
        }
        validate_spec(spec);
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InconsistentSpec, std::string("malformed spec: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InconsistentSpec) throw;
        throw Error(ErrorKind::InconsistentSpec, e.what());
    }
}

} // namespace odi
