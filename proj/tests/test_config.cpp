#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "odi/config.hpp"

using namespace odi;

TEST(AppConfig, Defaults) {
    AppConfig cfg;
    EXPECT_EQ(cfg.family, Family::NegBin);
    EXPECT_EQ(cfg.target_grid, (std::vector<std::int64_t>{300, 315, 330, 340, 350}));
    EXPECT_EQ(cfg.min_sample_size, 10u);
    EXPECT_EQ(cfg.quantile_cap, 2000);
    EXPECT_EQ(cfg.output_format, OutputFormat::Csv);
    EXPECT_EQ(cfg.curve_max, 600);
    EXPECT_TRUE(cfg.venues.empty());
}

TEST(AppConfig, ParsesKeyValueText) {
    AppConfig cfg;
    apply_config_text(cfg, "# comment\n"
                           "data = odi.csv\n"
                           "\n"
                           "venues = Sydney, Lords ,overall\n"
                           "family=logistic  # trailing comment\n"
                           "target_grid=310,320\n"
                           "min_sample_size=15\n"
                           "quantile_cap=900\n"
                           "format=json\n"
                           "seed=18446744073709551615\n"
                           "trials=5000\n");
    EXPECT_EQ(cfg.data_path, "odi.csv");
    EXPECT_EQ(cfg.venues, (std::vector<std::string>{"Sydney", "Lords", "overall"}));
    EXPECT_EQ(cfg.family, Family::Logistic);
    EXPECT_EQ(cfg.target_grid, (std::vector<std::int64_t>{310, 320}));
    EXPECT_EQ(cfg.min_sample_size, 15u);
    EXPECT_EQ(cfg.quantile_cap, 900);
    EXPECT_EQ(cfg.output_format, OutputFormat::Json);
    EXPECT_EQ(cfg.seed, 18446744073709551615ULL);
    EXPECT_EQ(cfg.trials, 5000u);
    EXPECT_EQ(cfg.revision().fit.min_sample, 15u);
    EXPECT_EQ(cfg.revision().quantile_cap, 900);
}

TEST(AppConfig, RejectsBadInput) {
    AppConfig cfg;
    auto kind = [&](const char* text) {
        try {
            apply_config_text(cfg, text);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::Io;
    };
    EXPECT_EQ(kind("colour=blue\n"), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind("family=poisson\n"), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind("seed=-1\n"), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind("format=xml\n"), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind("just a line\n"), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind("target_grid=\n"), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind("trials=0\n"), ErrorKind::InvalidConfig);
}

TEST(AppConfig, FlagsOverrideFileOverrideDefaults) {
    const std::string path = ::testing::TempDir() + "odi_config_test.cfg";
    {
        std::ofstream f(path);
        f << "family=normal\nseed=5\nmin_sample_size=12\n";
    }
    auto cfg = resolve_config(path, {{"seed", "9"}});
    EXPECT_EQ(cfg.family, Family::Normal); // file
    EXPECT_EQ(cfg.seed, 9u);               // flag
    EXPECT_EQ(cfg.min_sample_size, 12u);   // file
    EXPECT_EQ(cfg.quantile_cap, 2000);     // default
    std::remove(path.c_str());
    EXPECT_THROW(resolve_config(std::string("/nonexistent/odi.cfg"), {}), Error);
}

TEST(AppConfig, EveryKeyIsSettable) {
    AppConfig cfg;
    for (auto key : kConfigKeys) {
        const std::string value = key == "family" ? "nb" : key == "format" ? "csv" : key == "venues" ? "A" : key == "target_grid" ? "300" : key == "data" || key == "out" ? "x" : "7";
        EXPECT_NO_THROW(apply_setting(cfg, key, value)) << key;
    }
}
