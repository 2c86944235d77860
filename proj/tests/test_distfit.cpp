#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "odi/distfit.hpp"

using namespace odi;

namespace {

FittedDist nb(double n, double p) { return FittedDist{NegBinParams{n, p}, 0, 0.0, false}; }
FittedDist normal(double mu, double sigma) { return FittedDist{NormalParams{mu, sigma}, 0, 0.0, false}; }
FittedDist logistic(double mu, double s) { return FittedDist{LogisticParams{mu, s}, 0, 0.0, false}; }

// Oracle: C(x+n-1, x) p^n (1-p)^x with exact integer binomials, for integer n.
double exact_nb_pmf(std::int64_t x, int n, double p) {
    unsigned __int128 binom = 1;
    for (std::int64_t i = 1; i <= x; ++i) binom = binom * static_cast<unsigned __int128>(n - 1 + i) / i;
    return static_cast<double>(binom) * std::pow(p, n) * std::pow(1.0 - p, static_cast<double>(x));
}

std::vector<std::int64_t> std_nb_draws(int k, double p, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::negative_binomial_distribution<std::int64_t> dist(k, p);
    std::vector<std::int64_t> xs(count);
    for (auto& x : xs) x = dist(rng);
    return xs;
}

ErrorKind error_kind(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorKind::Io;
}

} // namespace

TEST(NbPmf, SpecExamples) {
    EXPECT_DOUBLE_EQ(nb_pmf(0, {1, 0.5}), 0.5);
    EXPECT_DOUBLE_EQ(nb_pmf(2, {1, 0.5}), 0.125);
    EXPECT_NEAR(nb_pmf(1, {2, 0.5}), exact_nb_pmf(1, 2, 0.5), 1e-15);
    EXPECT_NEAR(exact_nb_pmf(1, 2, 0.5), 0.25, 0.0);
    EXPECT_EQ(nb_pmf(-1, {2, 0.5}), 0.0);
}

TEST(NbPmf, LogGammaAgreesWithFactorials) {
    for (int n : {1, 2, 5})
        for (double p : {0.04, 0.3, 0.5, 0.9})
            for (std::int64_t x = 0; x <= 20; ++x) {
                const double exact = exact_nb_pmf(x, n, p);
                EXPECT_NEAR(nb_pmf(x, {static_cast<double>(n), p}) / exact, 1.0, 1e-12) << "x=" << x << " n=" << n;
            }
}

TEST(NbPmf, InvalidParams) {
    EXPECT_EQ(error_kind([] { nb_pmf(1, {0.0, 0.5}); }), ErrorKind::InvalidParams);
    EXPECT_EQ(error_kind([] { nb_pmf(1, {2.0, 1.0}); }), ErrorKind::InvalidParams);
    EXPECT_EQ(error_kind([] { nb_pmf(1, {2.0, 0.0}); }), ErrorKind::InvalidParams);
    EXPECT_EQ(error_kind([] { nb_pmf(1, {std::nan(""), 0.5}); }), ErrorKind::InvalidParams);
}

TEST(Cdf, Examples) {
    for (const auto& d : {nb(1, 0.5), normal(200, 30), logistic(200, 20)}) {
        EXPECT_EQ(cdf(d, -1), 0.0);
        EXPECT_EQ(survival(d, -1), 1.0);
        EXPECT_GE(survival(d, 200), survival(d, 300));
    }
    EXPECT_DOUBLE_EQ(cdf(nb(1, 0.5), 1), 0.75);
    EXPECT_DOUBLE_EQ(survival(nb(1, 0.5), 1), 0.25);
    EXPECT_DOUBLE_EQ(cdf(logistic(200, 20), 200), 0.5);
    EXPECT_DOUBLE_EQ(cdf(normal(200, 30), 200), 0.5);
}

TEST(Cdf, TableMatchesPointwiseAndIsMonotone) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 10; ++t) {
        const auto d = nb(std::uniform_real_distribution<>(0.5, 40)(rng), std::uniform_real_distribution<>(0.01, 0.3)(rng));
        const auto table = cdf_table(d, 600);
        double prev_c = 0.0;
        for (std::int64_t x = 0; x <= 600; x += 7) {
            const double c = cdf(d, x);
            EXPECT_EQ(table[static_cast<std::size_t>(x)], c);
            EXPECT_GE(c, prev_c);
            EXPECT_LE(std::abs(survival(d, x) + c - 1.0), std::numeric_limits<double>::epsilon());
            prev_c = c;
        }
    }
}

TEST(Quantile, Examples) {
    const auto g = nb(1, 0.5);
    EXPECT_EQ(quantile(g, 0.0).score, 0);
    EXPECT_EQ(quantile(g, 0.75).score, 1);
    // Oracle: linear scan over the exact geometric CDF 1 - (1-p)^(x+1).
    std::int64_t oracle = 0;
    while (1.0 - std::pow(0.5, static_cast<double>(oracle + 1)) < 0.76) ++oracle;
    EXPECT_EQ(oracle, 2);
    EXPECT_EQ(quantile(g, 0.76).score, oracle);
    EXPECT_EQ(quantile(normal(200, 30), 0.0).score, 0);
}

TEST(Quantile, DegenerateAtOne) {
    for (const auto& d : {nb(8, 0.04), normal(200, 30), logistic(200, 20)}) {
        auto q = quantile(d, 1.0, 1500);
        EXPECT_TRUE(q.capped);
        EXPECT_EQ(q.score, 1500);
    }
    auto q = quantile(nb(8, 0.04), 0.999, 100);
    EXPECT_TRUE(q.capped);
    EXPECT_EQ(q.score, 100);
    EXPECT_EQ(error_kind([] { quantile(nb(8, 0.04), 1.5); }), ErrorKind::InvalidParams);
    EXPECT_EQ(error_kind([] { quantile(nb(8, 0.04), -0.1); }), ErrorKind::InvalidParams);
}

TEST(Quantile, ContinuousCeilingFlooredAtZero) {
    EXPECT_EQ(quantile(logistic(200, 20), 0.5).score, 200);
    EXPECT_EQ(quantile(normal(200, 30), 0.5).score, 200);
    // Normal(0,1) 0.975 quantile is 1.959963...; scaled by 10 and shifted.
    EXPECT_EQ(quantile(normal(100, 10), 0.975).score, 120);
    EXPECT_EQ(quantile(normal(100, 10), 0.025).score, 81);
    EXPECT_EQ(quantile(normal(5, 10), 0.01).score, 0);
    // Logistic inverse: mu + s log(q/(1-q)); log(3) * 20 = 21.97
    EXPECT_EQ(quantile(logistic(200, 20), 0.75).score, 222);
}

TEST(Quantile, GaloisPropertyRandomized) {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 20; ++t) {
        const auto d = nb(std::uniform_real_distribution<>(0.3, 60)(rng), std::uniform_real_distribution<>(0.005, 0.6)(rng));
        for (int i = 1; i <= 999; ++i) {
            const double q = i / 1000.0;
            const auto x = quantile(d, q, 100000);
            ASSERT_FALSE(x.capped);
            EXPECT_GE(cdf(d, x.score), q);
            if (x.score > 0) {
                EXPECT_LT(cdf(d, x.score - 1), q);
            }
        }
    }
}

TEST(NbPmf, NormalizationToQuantile) {
    for (auto [n, p] : {std::pair{8.0, 0.04}, {1.0, 0.5}, {25.0, 0.1}, {0.7, 0.01}}) {
        const auto d = nb(n, p);
        const auto hi = quantile(d, 1.0 - 1e-10, 1'000'000);
        ASSERT_FALSE(hi.capped);
        double mass = 0.0;
        for (std::int64_t x = 0; x <= hi.score; ++x) mass += nb_pmf(x, {n, p});
        EXPECT_GE(mass, 1.0 - 1e-9);
    }
}

TEST(StepMass, MatchesPmfForNegBin) {
    const auto d = nb(8, 0.04);
    EXPECT_DOUBLE_EQ(step_mass(d, 190), nb_pmf(190, {8, 0.04}));
    const auto n = normal(200, 30);
    EXPECT_NEAR(step_mass(n, 200), cdf(n, 200) - cdf(n, 199), 0.0);
}

TEST(FitNb, RecoversSeededNegBin) {
    const auto xs = std_nb_draws(8, 0.04, 5000, 20240601);
    const auto f = fit_nb(xs);
    const auto& p = std::get<NegBinParams>(f.params);
    const double sample_mean = moments(xs).mean;
    EXPECT_FALSE(f.degenerate);
    EXPECT_NEAR(p.mean(), 192.0, 0.01 * 192.0);
    EXPECT_NEAR(p.n, 8.0, 0.8);
    EXPECT_NEAR(p.mean(), sample_mean, 1e-6 * sample_mean);
    EXPECT_EQ(f.sample_size, 5000u);
    EXPECT_TRUE(std::isfinite(f.log_likelihood));
}

TEST(FitNb, MaximizesProfileLikelihood) {
    // Oracle: brute-force grid over log(n) of the profiled log-likelihood.
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto xs = std_nb_draws(5, 0.03, 400, seed);
        const auto f = fit_nb(xs);
        const double xbar = moments(xs).mean;
        double best = -1e300;
        for (double t = std::log(0.5); t <= std::log(200.0); t += 0.001) {
            const double n = std::exp(t);
            best = std::max(best, log_likelihood(NegBinParams{n, n / (n + xbar)}, xs));
        }
        EXPECT_GE(f.log_likelihood, best - 1e-6);
        EXPECT_GE(f.log_likelihood, log_likelihood(nb_method_of_moments(xs), xs));
    }
}

TEST(FitNb, UnderdispersedSamples) {
    const std::vector<std::int64_t> flat(20, 250);
    EXPECT_EQ(error_kind([&] { fit_nb(flat); }), ErrorKind::UnderdispersedSample);
    NbFitConfig cfg;
    cfg.allow_degenerate = true;
    const auto f = fit_nb(flat, cfg);
    EXPECT_TRUE(f.degenerate);
    EXPECT_EQ(std::get<NegBinParams>(f.params).n, cfg.n_upper);
    EXPECT_NEAR(std::get<NegBinParams>(f.params).mean(), 250.0, 1e-9);

    const std::vector<std::int64_t> zeros(20, 0);
    EXPECT_EQ(error_kind([&] { fit_nb(zeros, cfg); }), ErrorKind::UnderdispersedSample);
}

TEST(FitNb, InsufficientSample) {
    const std::vector<std::int64_t> few = {200, 250, 300};
    EXPECT_EQ(error_kind([&] { fit_nb(few); }), ErrorKind::InsufficientSample);
    EXPECT_EQ(error_kind([&] { fit_normal(few); }), ErrorKind::InsufficientSample);
    EXPECT_EQ(error_kind([&] { fit_logistic(std::vector<std::int64_t>{}, 0); }), ErrorKind::InsufficientSample);
}

TEST(FitMoments, TwoPointSample) {
    const std::vector<std::int64_t> xs = {190, 210};
    const auto fn = fit_normal(xs, 2);
    EXPECT_DOUBLE_EQ(std::get<NormalParams>(fn.params).mu, 200.0);
    EXPECT_DOUBLE_EQ(std::get<NormalParams>(fn.params).sigma, std::sqrt(200.0));
    const auto fl = fit_logistic(xs, 2);
    EXPECT_DOUBLE_EQ(std::get<LogisticParams>(fl.params).mu, 200.0);
    EXPECT_DOUBLE_EQ(std::get<LogisticParams>(fl.params).s, std::sqrt(3.0 * 200.0) / std::numbers::pi);
    EXPECT_DOUBLE_EQ(cdf(fn, 200), 0.5);
    EXPECT_EQ(error_kind([] { fit_normal(std::vector<std::int64_t>(12, 5)); }), ErrorKind::ZeroVariance);
    EXPECT_EQ(error_kind([] { fit_logistic(std::vector<std::int64_t>(12, 5)); }), ErrorKind::ZeroVariance);
}

TEST(FitMoments, LogisticVarianceMatchesSample) {
    const auto xs = std_nb_draws(10, 0.05, 300, 9);
    const auto s = std::get<LogisticParams>(fit_logistic(xs).params).s;
    EXPECT_NEAR(s * s * std::numbers::pi * std::numbers::pi / 3.0, moments(xs).variance, 1e-9 * moments(xs).variance);
}

TEST(FittedJson, RoundTripAndValidation) {
    const auto xs = std_nb_draws(8, 0.04, 200, 4);
    for (auto fam : kAllFamilies) {
        const auto d = fit(fam, xs);
        const auto j = fitted_json(d, "Sydney", "BatFirstWin");
        const auto back = fitted_from_json(nlohmann::json::parse(j.dump()));
        EXPECT_EQ(back.dist, d);
        EXPECT_EQ(back.venue, "Sydney");
        EXPECT_EQ(back.case_label, "BatFirstWin");
    }
    auto bad = fitted_json(fit_nb(xs), "Sydney", "BatFirstWin");
    bad["params"]["p"] = 1.5;
    EXPECT_EQ(error_kind([&] { fitted_from_json(bad); }), ErrorKind::InvalidParams);
    bad.erase("params");
    EXPECT_EQ(error_kind([&] { fitted_from_json(bad); }), ErrorKind::InvalidParams);
}

TEST(Family, Parsing) {
    EXPECT_EQ(parse_family("nb"), Family::NegBin);
    EXPECT_EQ(parse_family("NegBin"), Family::NegBin);
    EXPECT_EQ(parse_family("Normal"), Family::Normal);
    EXPECT_EQ(parse_family("logistic"), Family::Logistic);
    EXPECT_EQ(parse_family("poisson"), std::nullopt);
}
