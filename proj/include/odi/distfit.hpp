#pragma once

// Score distributions: negative binomial (pmf G(x+n)/(G(n) x!) p^n (1-p)^x, mean
// n(1-p)/p), normal and logistic. Evaluation, quantiles and fitting.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "odi/error.hpp"

namespace odi {

enum class Family { NegBin, Normal, Logistic };

inline constexpr std::array<Family, 3> kAllFamilies = {Family::NegBin, Family::Normal, Family::Logistic};

constexpr std::string_view to_string(Family f) noexcept {
    switch (f) {
    case Family::NegBin: return "NegBin";
    case Family::Normal: return "Normal";
    case Family::Logistic: return "Logistic";
    }
    return "";
}

/// Short CLI spelling: nb | normal | logistic.
constexpr std::string_view short_name(Family f) noexcept {
    switch (f) {
    case Family::NegBin: return "nb";
    case Family::Normal: return "normal";
    case Family::Logistic: return "logistic";
    }
    return "";
}

/// Accepts either the long or the short spelling, case-insensitively.
inline std::optional<Family> parse_family(std::string_view s) {
    std::string l;
    for (char c : s) l.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    for (auto f : kAllFamilies) {
        std::string longname;
        for (char c : to_string(f)) longname.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        if (l == longname || l == short_name(f)) return f;
    }
    return std::nullopt;
}

struct NegBinParams {
    double n = 1.0; ///< size / dispersion
    double p = 0.5; ///< success probability

    double mean() const { return n * (1.0 - p) / p; }
    double variance() const { return n * (1.0 - p) / (p * p); }
    bool valid() const { return std::isfinite(n) && n > 0 && p > 0 && p < 1 && std::isfinite(mean()) && mean() > 0; }
    bool operator==(const NegBinParams&) const = default;
};

struct NormalParams {
    double mu = 0.0;
    double sigma = 1.0;

    bool valid() const { return std::isfinite(mu) && std::isfinite(sigma) && sigma > 0; }
    bool operator==(const NormalParams&) const = default;
};

struct LogisticParams {
    double mu = 0.0;
    double s = 1.0; ///< scale; variance is s^2 pi^2 / 3

    bool valid() const { return std::isfinite(mu) && std::isfinite(s) && s > 0; }
    bool operator==(const LogisticParams&) const = default;
};

using DistParams = std::variant<NegBinParams, NormalParams, LogisticParams>;

struct FittedDist {
    DistParams params;
    std::size_t sample_size = 0;
    double log_likelihood = 0.0;
    bool degenerate = false;

    Family family() const { return static_cast<Family>(params.index()); }
    bool operator==(const FittedDist&) const = default;
};

inline bool valid(const DistParams& p) {
    return std::visit([](const auto& q) { return q.valid(); }, p);
}

inline void require_valid(const DistParams& p) {
    if (!valid(p)) throw Error(ErrorKind::InvalidParams, "distribution parameters out of range");
}

inline double mean(const DistParams& p) {
    return std::visit(
        [](const auto& q) -> double {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, NegBinParams>) return q.mean();
            else return q.mu;
        },
        p);
}

// ---------------------------------------------------------------------------
// Negative binomial mass

namespace detail {

/// Caches the x-independent parts of the log-PMF so that pmf, cdf and
/// quantile all evaluate identical floating-point terms.
struct NbTerms {
    explicit NbTerms(const NegBinParams& prm) : n(prm.n), lgamma_n(std::lgamma(prm.n)), n_log_p(prm.n * std::log(prm.p)),
                                               log_q(std::log1p(-prm.p)) {}

    double log_pmf(std::int64_t x) const {
        const double xd = static_cast<double>(x);
        return std::lgamma(xd + n) - lgamma_n - std::lgamma(xd + 1.0) + n_log_p + xd * log_q;
    }
    double pmf(std::int64_t x) const { return x < 0 ? 0.0 : std::exp(log_pmf(x)); }

    double n, lgamma_n, n_log_p, log_q;
};

} // namespace detail

inline double nb_log_pmf(std::int64_t x, const NegBinParams& prm) {
    require_valid(prm);
    if (x < 0) return -std::numeric_limits<double>::infinity();
    return detail::NbTerms(prm).log_pmf(x);
}

/// Gamma(x+n) / (Gamma(n) x!) p^n (1-p)^x, evaluated through log-gamma.
inline double nb_pmf(std::int64_t x, const NegBinParams& prm) {
    require_valid(prm);
    return detail::NbTerms(prm).pmf(x);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace detail {

inline constexpr double kSqrt2 = std::numbers::sqrt2;

inline double normal_cdf(const NormalParams& p, double x) {
    return 0.5 * std::erfc(-(x - p.mu) / (p.sigma * kSqrt2));
}

inline double logistic_cdf(const LogisticParams& p, double x) {
    return 1.0 / (1.0 + std::exp(-(x - p.mu) / p.s));
}

inline double normal_log_pdf(const NormalParams& p, double x) {
    const double z = (x - p.mu) / p.sigma;
    return -0.5 * z * z - std::log(p.sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double logistic_log_pdf(const LogisticParams& p, double x) {
    const double z = std::abs((x - p.mu) / p.s);
    return -z - std::log(p.s) - 2.0 * std::log1p(std::exp(-z));
}

} // namespace detail

/// P(X <= x). NegBin: clamped partial sum of the PMF from 0 to x, so the
/// value is reproduced bit-for-bit by cdf_table and quantile. Continuous
/// families: analytic CDF at x, no continuity correction.
inline double cdf(const FittedDist& d, std::int64_t x) {
    if (x < 0) return 0.0;
    require_valid(d.params);
    return std::visit(
        [x](const auto& prm) -> double {
            using T = std::decay_t<decltype(prm)>;
            if constexpr (std::is_same_v<T, NegBinParams>) {
                detail::NbTerms t(prm);
                double acc = 0.0;
                for (std::int64_t k = 0; k <= x; ++k) {
                    acc += t.pmf(k);
                    if (acc >= 1.0) return 1.0;
                }
                return acc;
            } else if constexpr (std::is_same_v<T, NormalParams>) {
                return detail::normal_cdf(prm, static_cast<double>(x));
            } else {
                return detail::logistic_cdf(prm, static_cast<double>(x));
            }
        },
        d.params);
}

/// P(X > x) = 1 - cdf(x).
inline double survival(const FittedDist& d, std::int64_t x) { return 1.0 - cdf(d, x); }

/// cdf(x) for x = 0..max_x in one pass; entry k equals cdf(d, k) exactly.
inline std::vector<double> cdf_table(const FittedDist& d, std::int64_t max_x) {
    require_valid(d.params);
    std::vector<double> out;
    if (max_x < 0) return out;
    out.reserve(static_cast<std::size_t>(max_x) + 1);
    if (const auto* nb = std::get_if<NegBinParams>(&d.params)) {
        detail::NbTerms t(*nb);
        double acc = 0.0;
        for (std::int64_t k = 0; k <= max_x; ++k) {
            if (acc < 1.0) {
                acc += t.pmf(k);
                if (acc >= 1.0) acc = 1.0;
            }
            out.push_back(acc);
        }
    } else {
        for (std::int64_t k = 0; k <= max_x; ++k) out.push_back(cdf(d, k));
    }
    return out;
}

/// Probability mass of the integer step at x: the PMF for NegBin, and
/// cdf(x) - cdf(x-1) for the continuous families.
inline double step_mass(const FittedDist& d, std::int64_t x) {
    if (const auto* nb = std::get_if<NegBinParams>(&d.params)) return nb_pmf(x, *nb);
    return cdf(d, x) - cdf(d, x - 1);
}

struct Quantile {
    std::int64_t score = 0;
    bool capped = false; ///< q was unreachable below the hard cap

    bool operator==(const Quantile&) const = default;
};

inline constexpr std::int64_t kDefaultQuantileCap = 2000;

/// Smallest integer x >= 0 with cdf(x) >= q for NegBin; ceiling of the
/// analytic inverse (floored at 0) for the continuous families. q = 1 has no
/// finite answer and yields the cap with `capped` set.
inline Quantile quantile(const FittedDist& d, double q, std::int64_t cap = kDefaultQuantileCap) {
    if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorKind::InvalidParams, fmt::format("quantile level {} outside [0,1]", q));
    require_valid(d.params);
    if (q == 0.0) return {0, false};
    if (q >= 1.0) return {cap, true};
    return std::visit(
        [&](const auto& prm) -> Quantile {
            using T = std::decay_t<decltype(prm)>;
            if constexpr (std::is_same_v<T, NegBinParams>) {
                detail::NbTerms t(prm);
                double acc = 0.0;
                for (std::int64_t k = 0; k <= cap; ++k) {
                    acc += t.pmf(k);
                    if (acc >= 1.0) acc = 1.0;
                    if (acc >= q) return {k, false};
                }
                return {cap, true};
            } else {
                double x = 0.0;
                if constexpr (std::is_same_v<T, NormalParams>) {
                    x = prm.mu - prm.sigma * detail::kSqrt2 * boost::math::erfc_inv(2.0 * q);
                } else {
                    x = prm.mu + prm.s * std::log(q / (1.0 - q));
                }
                const double c = std::max(0.0, std::ceil(x));
                if (c > static_cast<double>(cap)) return {cap, true};
                return {static_cast<std::int64_t>(c), false};
            }
        },
        d.params);
}

// ---------------------------------------------------------------------------
// Likelihood and moments

inline double log_likelihood(const DistParams& params, std::span<const std::int64_t> xs) {
    require_valid(params);
    return std::visit(
        [xs](const auto& prm) -> double {
            using T = std::decay_t<decltype(prm)>;
            double ll = 0.0;
            if constexpr (std::is_same_v<T, NegBinParams>) {
                detail::NbTerms t(prm);
                for (auto x : xs) ll += x < 0 ? -std::numeric_limits<double>::infinity() : t.log_pmf(x);
            } else if constexpr (std::is_same_v<T, NormalParams>) {
                for (auto x : xs) ll += detail::normal_log_pdf(prm, static_cast<double>(x));
            } else {
                for (auto x : xs) ll += detail::logistic_log_pdf(prm, static_cast<double>(x));
            }
            return ll;
        },
        params);
}

struct SampleMoments {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0; ///< denominator N-1; 0 for a single observation
};

inline SampleMoments moments(std::span<const std::int64_t> xs) {
    SampleMoments m;
    m.count = xs.size();
    if (xs.empty()) return m;
    double sum = 0.0;
    for (auto x : xs) sum += static_cast<double>(x);
    m.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return m;
    double ss = 0.0;
    for (auto x : xs) {
        const double d = static_cast<double>(x) - m.mean;
        ss += d * d;
    }
    m.variance = ss / static_cast<double>(xs.size() - 1);
    return m;
}

/// Method-of-moments NegBin: n = mean^2 / (var - mean), p = mean / var.
/// Requires var > mean.
inline NegBinParams nb_method_of_moments(std::span<const std::int64_t> xs) {
    auto m = moments(xs);
    if (!(m.variance > m.mean) || m.mean <= 0)
        throw Error(ErrorKind::UnderdispersedSample, "method of moments needs variance > mean > 0");
    return {m.mean * m.mean / (m.variance - m.mean), m.mean / m.variance};
}

// ---------------------------------------------------------------------------
// Fitting

inline constexpr std::size_t kDefaultMinSample = 10;

struct NbFitConfig {
    std::size_t min_sample = kDefaultMinSample;
    double n_lower = 1e-3;
    double n_upper = 1e6;
    double rel_tol = 1e-8;
    /// Return the search bound with the degenerate flag instead of throwing
    /// UnderdispersedSample.
    bool allow_degenerate = false;
};

namespace detail {

inline void require_sample(std::span<const std::int64_t> xs, std::size_t min_sample) {
    if (xs.size() < min_sample || xs.empty())
        throw Error(ErrorKind::InsufficientSample,
                    fmt::format("sample of {} below minimum {}", xs.size(), std::max<std::size_t>(min_sample, 1)));
    for (auto x : xs)
        if (x < 0) throw Error(ErrorKind::InvalidParams, "scores must be non-negative");
}

/// Derivative of the profiled NegBin log-likelihood with respect to n, with
/// p = n / (n + mean). For integer data digamma(x+n) - digamma(n) is the
/// finite sum over k < x of 1/(n+k), so with tail[k] = #{i : x_i > k}:
///   score(n) = sum_k tail[k] / (n+k) + N log(n / (n + mean)).
class NbProfileScore {
public:
    explicit NbProfileScore(std::span<const std::int64_t> xs) : count_(static_cast<double>(xs.size())) {
        std::int64_t max_x = 0;
        double sum = 0.0;
        for (auto x : xs) {
            max_x = std::max(max_x, x);
            sum += static_cast<double>(x);
        }
        mean_ = sum / count_;
        std::vector<double> hist(static_cast<std::size_t>(max_x) + 1, 0.0);
        for (auto x : xs) hist[static_cast<std::size_t>(x)] += 1.0;
        tail_.assign(static_cast<std::size_t>(max_x), 0.0);
        double above = count_;
        for (std::size_t k = 0; k < tail_.size(); ++k) {
            above -= hist[k];
            tail_[k] = above;
        }
    }

    double operator()(double n) const {
        double s = 0.0;
        for (std::size_t k = 0; k < tail_.size(); ++k) s += tail_[k] / (n + static_cast<double>(k));
        return s + count_ * std::log1p(-mean_ / (n + mean_));
    }

    double mean() const { return mean_; }

private:
    double count_;
    double mean_ = 0.0;
    std::vector<double> tail_;
};

} // namespace detail

/// Maximum-likelihood NegBin fit. p is profiled out as n / (n + mean), so
/// the fitted mean equals the sample mean; n is found by bisection on the
/// profile score in log(n) over [n_lower, n_upper].
inline FittedDist fit_nb(std::span<const std::int64_t> xs, const NbFitConfig& cfg = {}) {
    detail::require_sample(xs, cfg.min_sample);
    if (!(cfg.n_lower > 0 && cfg.n_upper > cfg.n_lower && cfg.rel_tol > 0))
        throw Error(ErrorKind::InvalidConfig, "invalid NegBin search bracket");

    detail::NbProfileScore score(xs);
    const double xbar = score.mean();
    if (xbar <= 0) throw Error(ErrorKind::UnderdispersedSample, "all scores are zero");

    auto make = [&](double n, bool degenerate) {
        FittedDist d;
        d.params = NegBinParams{n, n / (n + xbar)};
        d.sample_size = xs.size();
        d.log_likelihood = log_likelihood(d.params, xs);
        d.degenerate = degenerate;
        return d;
    };

    // Score > 0 at the upper bound means the likelihood is still rising:
    // variance <= mean, the Poisson limit.
    if (score(cfg.n_upper) >= 0) {
        if (!cfg.allow_degenerate)
            throw Error(ErrorKind::UnderdispersedSample, "sample variance does not exceed the mean");
        return make(cfg.n_upper, true);
    }
    if (score(cfg.n_lower) <= 0) return make(cfg.n_lower, true);

    double lo = std::log(cfg.n_lower);
    double hi = std::log(cfg.n_upper);
    while (hi - lo > cfg.rel_tol) {
        const double mid = 0.5 * (lo + hi);
        if (score(std::exp(mid)) > 0) lo = mid;
        else hi = mid;
    }
    return make(std::exp(lo), false);
}

/// Moment fit: mu = mean, sigma = sample standard deviation (N-1).
inline FittedDist fit_normal(std::span<const std::int64_t> xs, std::size_t min_sample = kDefaultMinSample) {
    detail::require_sample(xs, min_sample);
    auto m = moments(xs);
    if (!(m.variance > 0)) throw Error(ErrorKind::ZeroVariance, "sample variance is zero");
    FittedDist d;
    d.params = NormalParams{m.mean, std::sqrt(m.variance)};
    d.sample_size = xs.size();
    d.log_likelihood = log_likelihood(d.params, xs);
    return d;
}

/// Moment fit: mu = mean, s = sqrt(3 var) / pi.
inline FittedDist fit_logistic(std::span<const std::int64_t> xs, std::size_t min_sample = kDefaultMinSample) {
    detail::require_sample(xs, min_sample);
    auto m = moments(xs);
    if (!(m.variance > 0)) throw Error(ErrorKind::ZeroVariance, "sample variance is zero");
    FittedDist d;
    d.params = LogisticParams{m.mean, std::sqrt(3.0 * m.variance) / std::numbers::pi};
    d.sample_size = xs.size();
    d.log_likelihood = log_likelihood(d.params, xs);
    return d;
}

inline FittedDist fit(Family family, std::span<const std::int64_t> xs, const NbFitConfig& cfg = {}) {
    switch (family) {
    case Family::NegBin: return fit_nb(xs, cfg);
    case Family::Normal: return fit_normal(xs, cfg.min_sample);
    case Family::Logistic: return fit_logistic(xs, cfg.min_sample);
    }
    throw Error(ErrorKind::InvalidParams, "unknown family");
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json params_json(const DistParams& p) {
    return std::visit(
        [](const auto& q) -> nlohmann::json {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, NegBinParams>) return {{"n", q.n}, {"p", q.p}};
            else if constexpr (std::is_same_v<T, NormalParams>) return {{"mu", q.mu}, {"sigma", q.sigma}};
            else return {{"mu", q.mu}, {"s", q.s}};
        },
        p);
}

/// {venue, case, family, params, sample_size, log_likelihood, degenerate_flag}
inline nlohmann::json fitted_json(const FittedDist& d, std::string_view venue, std::string_view case_label) {
    return {{"venue", venue},
            {"case", case_label},
            {"family", to_string(d.family())},
            {"params", params_json(d.params)},
            {"sample_size", d.sample_size},
            {"log_likelihood", d.log_likelihood},
            {"degenerate_flag", d.degenerate}};
}

struct FittedRecord {
    std::string venue;
    std::string case_label;
    FittedDist dist;
};

/// Inverse of fitted_json. Throws InvalidParams on a missing field, unknown
/// family, or parameters violating their invariants.
inline FittedRecord fitted_from_json(const nlohmann::json& j) {
    try {
        FittedRecord r;
        r.venue = j.at("venue").get<std::string>();
        r.case_label = j.at("case").get<std::string>();
        auto fam = parse_family(j.at("family").get<std::string>());
        if (!fam) throw Error(ErrorKind::InvalidParams, "unknown family");
        const auto& p = j.at("params");
        switch (*fam) {
        case Family::NegBin: r.dist.params = NegBinParams{p.at("n").get<double>(), p.at("p").get<double>()}; break;
        case Family::Normal: r.dist.params = NormalParams{p.at("mu").get<double>(), p.at("sigma").get<double>()}; break;
        case Family::Logistic: r.dist.params = LogisticParams{p.at("mu").get<double>(), p.at("s").get<double>()}; break;
        }
        require_valid(r.dist.params);
        r.dist.sample_size = j.at("sample_size").get<std::size_t>();
        r.dist.log_likelihood = j.at("log_likelihood").get<double>();
        if (!std::isfinite(r.dist.log_likelihood)) throw Error(ErrorKind::InvalidParams, "log_likelihood not finite");
        r.dist.degenerate = j.at("degenerate_flag").get<bool>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidParams, std::string("malformed fitted model: ") + e.what());
    }
}

} // namespace odi
