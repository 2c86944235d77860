#pragma once

// Invariant suite run against a loaded dataset (the `validate` command).

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "odi/distfit.hpp"
#include "odi/match_data.hpp"
#include "odi/revision.hpp"

namespace odi {

enum class CheckStatus { Pass, Fail, Skip };

constexpr std::string_view to_string(CheckStatus s) noexcept {
    switch (s) {
    case CheckStatus::Pass: return "PASS";
    case CheckStatus::Fail: return "FAIL";
    case CheckStatus::Skip: return "SKIP";
    }
    return "";
}

struct CheckResult {
    std::string name;
    CheckStatus status = CheckStatus::Pass;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;

    bool ok() const {
        return std::none_of(checks.begin(), checks.end(),
                            [](const CheckResult& c) { return c.status == CheckStatus::Fail; });
    }
    std::size_t count(CheckStatus s) const {
        return static_cast<std::size_t>(
            std::count_if(checks.begin(), checks.end(), [s](const CheckResult& c) { return c.status == s; }));
    }
};

struct ValidateConfig {
    RevisionConfig revision;
    std::int64_t curve_max = 600;
    std::int64_t revise_from = 300;
    std::int64_t revise_to = 350;
};

namespace detail {

/// Property checks on one fitted NegBin law. Returns an empty string on
/// success, otherwise the first violation.
inline std::string check_nb_law(const FittedDist& d, std::span<const std::int64_t> xs, std::int64_t curve_max,
                                std::int64_t cap) {
    const auto& prm = std::get<NegBinParams>(d.params);

    // normalization
    const auto hi = quantile(d, 1.0 - 1e-10, std::max<std::int64_t>(cap, 100000));
    double mass = 0.0;
    for (std::int64_t x = 0; x <= hi.score; ++x) mass += nb_pmf(x, prm);
    if (mass < 1.0 - 1e-9) return fmt::format("PMF mass {} up to {} below 1-1e-9", mass, hi.score);

    // survival monotone, survival + cdf = 1
    const auto table = cdf_table(d, curve_max);
    double prev = 1.0;
    for (std::int64_t x = 0; x <= curve_max; ++x) {
        const double c = table[static_cast<std::size_t>(x)];
        const double s = 1.0 - c;
        if (s > prev) return fmt::format("survival increases at {}", x);
        if (std::abs(s + c - 1.0) > 1e-15) return fmt::format("survival + cdf != 1 at {}", x);
        prev = s;
    }

    // quantile / cdf Galois connection
    for (int i = 1; i <= 999; ++i) {
        const double q = i / 1000.0;
        const auto xq = quantile(d, q, cap);
        if (xq.capped) continue;
        if (cdf(d, xq.score) < q) return fmt::format("cdf(quantile({})) < q", q);
        if (xq.score > 0 && cdf(d, xq.score - 1) >= q) return fmt::format("quantile({}) not minimal", q);
    }

    if (!d.degenerate) {
        const double sample_mean = moments(xs).mean;
        if (std::abs(prm.mean() - sample_mean) > 1e-6 * sample_mean)
            return fmt::format("fitted mean {} differs from sample mean {}", prm.mean(), sample_mean);
        try {
            const double ll_mom = log_likelihood(nb_method_of_moments(xs), xs);
            if (d.log_likelihood < ll_mom - 1e-9 * std::abs(ll_mom))
                return fmt::format("MLE log-likelihood {} below moment fit {}", d.log_likelihood, ll_mom);
        } catch (const Error&) {
        }
    }
    return {};
}

} // namespace detail

inline ValidationReport validate_dataset(const std::vector<MatchRecord>& records, const ValidateConfig& cfg = {}) {
    ValidationReport rep;
    auto add = [&](std::string name, bool ok, std::string detail = {}) {
        rep.checks.push_back({std::move(name), ok ? CheckStatus::Pass : CheckStatus::Fail, std::move(detail)});
    };
    auto skip = [&](std::string name, std::string detail) {
        rep.checks.push_back({std::move(name), CheckStatus::Skip, std::move(detail)});
    };

    // Record-level invariants (parse already enforced them; re-checked for
    // records built in memory).
    {
        std::size_t bad = 0;
        for (const auto& r : records)
            if (!outcome_violation(r).empty()) ++bad;
        add("records: outcomes consistent with scores", bad == 0, fmt::format("{} inconsistent", bad));
    }
    {
        bool same = false;
        try {
            same = parse_matches(serialize_matches(records)) == records;
        } catch (const Error&) {
        }
        add("records: CSV round trip", same);
    }

    const auto ds = categorize(records);
    {
        auto reversed = records;
        std::reverse(reversed.begin(), reversed.end());
        add("categorize: permutation invariant", categorize(reversed) == ds);
    }

    std::map<std::string, std::size_t> decisive;
    std::size_t decisive_total = 0;
    for (const auto& r : records) {
        if ((r.outcome == Outcome::BatFirstWin || r.outcome == Outcome::BatSecondWin) && !r.reduced_overs) {
            ++decisive[venue_key(r.venue)];
            ++decisive_total;
        }
    }

    std::vector<const VenueCases*> all;
    for (const auto& [k, v] : ds.venues()) all.push_back(&v);
    all.push_back(&ds.overall());

    for (const auto* v : all) {
        const auto& name = v->venue;
        const bool paired = (*v)[CaseLabel::BatFirstWin].size() == (*v)[CaseLabel::BatSecondLose].size() &&
                            (*v)[CaseLabel::BatFirstLose].size() == (*v)[CaseLabel::BatSecondWin].size();
        add(name + ": case sizes pair up", paired);
        std::size_t sum = 0;
        for (const auto& s : v->samples) sum += s.size();
        const std::size_t expect = v == &ds.overall() ? decisive_total : decisive[venue_key(name)];
        add(name + ": sample sizes = 2 x decisive matches", sum == 2 * expect,
            fmt::format("{} vs 2 x {}", sum, expect));
        if (v->decisive_matches() > 0) {
            const auto row = summarize_venue(*v);
            const double pct = 100.0 * static_cast<double>(v->bat_first_wins()) /
                               static_cast<double>(v->bat_first_wins() + v->bat_second_wins());
            add(name + ": win percentage from counts", row.pct_bat_first_win == pct &&
                                                            std::abs(row.pct_bat_first_win + row.pct_bat_second_win - 100.0) < 1e-9);
        }

        // Fitted laws.
        NbFitConfig fit_cfg = cfg.revision.fit;
        fit_cfg.allow_degenerate = true;
        for (auto c : kAllCases) {
            const auto label = fmt::format("{} {}: NegBin law properties", name, to_string(c));
            try {
                const auto d = fit_nb((*v)[c], fit_cfg);
                auto why = detail::check_nb_law(d, (*v)[c], cfg.curve_max, cfg.revision.quantile_cap);
                add(label, why.empty(), why);
            } catch (const Error& e) {
                skip(label, e.what());
            }
        }

        // Revision.
        const auto label = fmt::format("{}: revision monotone and equalized on [{}, {}]", name, cfg.revise_from,
                                       cfg.revise_to);
        try {
            const auto model = build_model(ds, name, Family::NegBin, cfg.revision);
            std::string why;
            std::int64_t prev = -1;
            const auto& bs = std::get<NegBinParams>(model.dist_bs_win.params);
            for (auto xf = cfg.revise_from; xf <= cfg.revise_to && why.empty(); ++xf) {
                const auto rt = revise_target(model, xf, cfg.revision.quantile_cap);
                if (rt.revised_target < prev) why = fmt::format("Xs decreases at Xf={}", xf);
                prev = rt.revised_target;
                if (rt.capped) continue;
                const double lhs = survival(model.dist_bs_win, rt.revised_target);
                const double rhs = model.c_ratio * survival(model.dist_bf_win, xf);
                if (std::abs(lhs - rhs) > nb_pmf(rt.revised_target, bs))
                    why = fmt::format("identity off by {} at Xf={}", std::abs(lhs - rhs), xf);
            }
            add(label, why.empty(), why);
        } catch (const Error& e) {
            skip(label, e.what());
        }
    }
    return rep;
}

} // namespace odi
