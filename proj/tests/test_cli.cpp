#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <unistd.h>

namespace {

struct Run {
    int code;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(ODI_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return {-1, {}};
    std::string out;
    std::array<char, 4096> buf{};
    while (auto n = fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
    const int status = pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = std::filesystem::path(::testing::TempDir()) / ("odi_cli_test_" + std::to_string(getpid()));
        std::filesystem::create_directories(dir_);
        data_ = (dir_ / "matches.csv").string();
        ASSERT_EQ(run("generate --seed 3 --out " + data_).code, 0);
    }
    static inline std::filesystem::path dir_;
    static inline std::string data_;
};

} // namespace

TEST_F(Cli, SummaryOnGeneratedData) {
    const auto r = run("summary --data " + data_);
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("venue,total_matches,pct_bat_first_win", 0), 0u);
    EXPECT_NE(r.out.find("\noverall,"), std::string::npos);
    const auto f = run("summary --data " + data_ + " --venues sydney,overall --format json");
    ASSERT_EQ(f.code, 0);
    EXPECT_NE(f.out.find("Sydney"), std::string::npos);
    EXPECT_EQ(f.out.find("Lords"), std::string::npos);
}

TEST_F(Cli, InputErrorsExitTwo) {
    EXPECT_EQ(run("summary --data /nonexistent/x.csv").code, 2);
    EXPECT_EQ(run("summary --data " + data_ + " --venues Atlantis").code, 2);
    EXPECT_EQ(run("summary --data " + data_ + " --family poisson").code, 2);
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    const auto bad = (dir_ / "bad.csv").string();
    std::ofstream(bad) << "match_id,venue\n1,x\n";
    EXPECT_EQ(run("summary --data " + bad).code, 2);
}

TEST_F(Cli, ReviseAndModelErrors) {
    const auto r = run("revise --data " + data_ + " --venue overall --target 320 --format json");
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("\"Xs\""), std::string::npos);
    // Demo Sydney has more bat-first wins than chases, so C > 1 and a low
    // first-innings score has no attainable revision.
    EXPECT_EQ(run("revise --data " + data_ + " --venue Sydney --target 0").code, 3);
    EXPECT_EQ(run("revise --data " + data_ + " --venue overall --target 320 --min-sample-size 100000").code, 3);
}

TEST_F(Cli, ValidatePasses) {
    EXPECT_EQ(run("validate --data " + data_).code, 0);
}

TEST_F(Cli, InconsistentOutcomeRejected) {
    // A record whose stated outcome disagrees with its scores.
    auto text = read_file(data_);
    const auto line_end = text.find('\n', text.find('\n') + 1);
    auto row = text.substr(text.find('\n') + 1, line_end - text.find('\n') - 1);
    ASSERT_NE(row.find("BatFirstWin"), std::string::npos);
    const auto bad = (dir_ / "bad_outcome.csv").string();
    std::ofstream(bad) << text.substr(0, text.find('\n') + 1) << std::regex_replace(row, std::regex(",BatFirstWin"), ",BatSecondWin")
                       << text.substr(line_end);
    EXPECT_EQ(run("validate --data " + bad).code, 2); // rejected at ingestion
}

TEST_F(Cli, SimulateIsDeterministic) {
    const std::string args = "simulate --data " + data_ + " --seed 11 --trials 200000 --target 330";
    const auto a = run(args + " --workers 1");
    const auto b = run(args + " --workers 4");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("\"consistent\""), std::string::npos);
    EXPECT_NE(run(args + " --seed 12").out, a.out);
}

TEST_F(Cli, CurvesStartAtOneAndDecrease) {
    const auto r = run("curves --data " + data_ + " --venues overall --curve-max 50");
    ASSERT_EQ(r.code, 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("venue,score,", 0), 0u) << line;
    std::vector<double> prev;
    int rows = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        ASSERT_GE(cells.size(), 6u) << line;
        std::vector<double> vals;
        for (std::size_t i = 2; i < 6; ++i) vals.push_back(std::stod(cells[i]));
        if (rows == 0) {
            EXPECT_EQ(cells[1], "-1");
            for (double v : vals) EXPECT_EQ(v, 1.0);
        } else {
            for (std::size_t i = 0; i < 4; ++i) EXPECT_LE(vals[i], prev[i]);
        }
        prev = vals;
        ++rows;
    }
    EXPECT_EQ(rows, 52);
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
    const auto cfg = (dir_ / "odi.cfg").string();
    std::ofstream(cfg) << "data=" << data_ << "\nformat=json\nvenues=overall\n";
    const auto from_file = run("summary --config " + cfg);
    ASSERT_EQ(from_file.code, 0);
    EXPECT_EQ(from_file.out.front(), '[');
    const auto overridden = run("summary --config " + cfg + " --format csv");
    ASSERT_EQ(overridden.code, 0);
    EXPECT_EQ(overridden.out.rfind("venue,", 0), 0u);
    std::ofstream(cfg) << "colour=blue\n";
    EXPECT_EQ(run("summary --config " + cfg).code, 2);
}

TEST_F(Cli, Table2AndGenerateRoundTrip) {
    const auto r = run("table2 --data " + data_);
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("venue,family,Xf,Xs,q_internal,status\n", 0), 0u);
    const auto spec = (dir_ / "spec.json").string();
    ASSERT_EQ(run("generate --spec-template --data " + data_ + " --out " + spec).code, 0);
    const auto regen = (dir_ / "regen.csv").string();
    ASSERT_EQ(run("generate --spec " + spec + " --seed 9 --out " + regen).code, 0);
    EXPECT_EQ(run("validate --data " + regen).code, 0);
}

TEST(CliDocs, EveryFlagIsDocumentedInReadme) {
    const auto readme = read_file(ODI_README_PATH);
    ASSERT_FALSE(readme.empty());
    std::set<std::string> flags;
    const std::regex flag_re("(--[a-z][a-z0-9-]*)");
    for (const std::string sub : {"", "summary", "fit", "curves", "revise", "table2", "simulate", "generate", "validate"}) {
        const auto help = run(sub + " --help").out;
        ASSERT_FALSE(help.empty()) << sub;
        for (std::sregex_iterator it(help.begin(), help.end(), flag_re), end; it != end; ++it) flags.insert((*it)[1]);
    }
    EXPECT_GT(flags.size(), 12u);
    for (const auto& f : flags) EXPECT_NE(readme.find("`" + f), std::string::npos) << f << " missing from README";
    for (const std::string code : {"| 0 |", "| 2 |", "| 3 |", "| 4 |"}) EXPECT_NE(readme.find(code), std::string::npos);
}
