// odi: command-line front end for venue scoring fits and revised targets.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "odi/odi.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitModel = 3;
constexpr int kExitValidation = 4;

constexpr const char* kExitCodeHelp = "Exit codes:\n"
                                      "  0  success\n"
                                      "  2  input error (I/O, parse, unknown venue, bad flag or config)\n"
                                      "  3  model or regime error (insufficient sample, target unattainable)\n"
                                      "  4  validation failure (validate found a violated invariant)\n";

int exit_code_for(odi::ErrorKind k) {
    using odi::ErrorKind;
    switch (k) {
    case ErrorKind::InsufficientSample:
    case ErrorKind::UnderdispersedSample:
    case ErrorKind::ZeroVariance:
    case ErrorKind::TargetUnattainable:
    case ErrorKind::InvalidParams: return kExitModel;
    default: return kExitInput;
    }
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

/// Writes to --out when given, stdout otherwise.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw odi::Error(odi::ErrorKind::Io, "cannot write '" + path + "'");
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

std::vector<odi::MatchRecord> load_records(const odi::AppConfig& cfg) {
    if (cfg.data_path.empty()) throw odi::Error(odi::ErrorKind::Io, "no dataset given (use --data)");
    std::ifstream in(cfg.data_path);
    if (!in) throw odi::Error(odi::ErrorKind::Io, "cannot open '" + cfg.data_path + "'");
    return odi::parse_matches(in);
}

/// Venue names to process: the filter if given, else every venue; "overall"
/// always last.
std::vector<std::string> selected_venues(const odi::CategorizedDataset& ds, const odi::AppConfig& cfg) {
    std::vector<std::string> out;
    bool want_overall = cfg.venues.empty();
    if (cfg.venues.empty()) {
        out = ds.venue_names();
    } else {
        for (const auto& [key, v] : ds.venues())
            for (const auto& w : cfg.venues)
                if (odi::venue_key(w) == key) {
                    out.push_back(v.venue);
                    break;
                }
        for (const auto& w : cfg.venues) {
            if (odi::venue_key(w) == odi::kOverallVenue) want_overall = true;
            else if (!ds.find(w)) throw odi::Error(odi::ErrorKind::UnknownVenue, "unknown venue '" + w + "'");
        }
    }
    if (want_overall) out.emplace_back(odi::kOverallVenue);
    return out;
}

// ---------------------------------------------------------------------------

int cmd_summary(const odi::AppConfig& cfg) {
    const auto ds = odi::categorize(load_records(cfg));
    if (cfg.venues.empty())
        for (const auto& [k, v] : ds.venues())
            if (v.decisive_matches() == 0) warn("venue '" + v.venue + "' has no decisive matches; omitted");
    const auto rows = odi::summarize(ds, cfg.venues);
    Output out(cfg.out_path);
    if (cfg.output_format == odi::OutputFormat::Json) out.stream() << odi::summary_json(rows).dump(2) << '\n';
    else odi::write_summary_csv(out.stream(), rows);
    return kExitOk;
}

int cmd_fit(const odi::AppConfig& cfg) {
    const auto ds = odi::categorize(load_records(cfg));
    auto fit_cfg = cfg.revision().fit;
    fit_cfg.allow_degenerate = true;
    auto arr = nlohmann::json::array();
    std::ostringstream csv;
    csv << "venue,case,family,n,p,mu,sigma,s,sample_size,log_likelihood,degenerate_flag\n";
    for (const auto& name : selected_venues(ds, cfg)) {
        const auto* v = ds.find(name);
        for (auto c : odi::kAllCases) {
            try {
                const auto d = odi::fit(cfg.family, (*v)[c], fit_cfg);
                if (d.degenerate) warn(fmt::format("{} {}: fit hit a search bound", name, odi::to_string(c)));
                arr.push_back(odi::fitted_json(d, name, odi::to_string(c)));
                std::string cols;
                std::visit(
                    [&](const auto& p) {
                        using T = std::decay_t<decltype(p)>;
                        if constexpr (std::is_same_v<T, odi::NegBinParams>) cols = fmt::format("{},{},,,", p.n, p.p);
                        else if constexpr (std::is_same_v<T, odi::NormalParams>) cols = fmt::format(",,{},{},", p.mu, p.sigma);
                        else cols = fmt::format(",,{},,{}", p.mu, p.s);
                    },
                    d.params);
                csv << odi::csv::quote(name) << ',' << odi::to_string(c) << ',' << odi::to_string(d.family()) << ','
                    << cols << ',' << d.sample_size << ',' << fmt::format("{}", d.log_likelihood) << ','
                    << (d.degenerate ? "true" : "false") << '\n';
            } catch (const odi::Error& e) {
                warn(fmt::format("{} {}: {}", name, odi::to_string(c), e.what()));
            }
        }
    }
    Output out(cfg.out_path);
    if (cfg.output_format == odi::OutputFormat::Json) out.stream() << arr.dump(2) << '\n';
    else out.stream() << csv.str();
    return kExitOk;
}

int cmd_curves(const odi::AppConfig& cfg) {
    const auto ds = odi::categorize(load_records(cfg));
    auto fit_cfg = cfg.revision().fit;
    fit_cfg.allow_degenerate = true;
    const bool per_file = !cfg.out_path.empty();
    if (per_file) std::filesystem::create_directories(cfg.out_path);
    const std::string header = "venue,score,bat_first_win,bat_first_lose,bat_second_win,bat_second_lose,status\n";
    if (!per_file) std::cout << header;

    for (const auto& name : selected_venues(ds, cfg)) {
        std::ostringstream body;
        const auto* v = ds.find(name);
        std::vector<std::vector<double>> cols;
        std::string status = "ok";
        try {
            for (auto c : odi::kAllCases) cols.push_back(odi::cdf_table(odi::fit(cfg.family, (*v)[c], fit_cfg), cfg.curve_max));
        } catch (const odi::Error& e) {
            status = fmt::format("skipped: {}", e.what());
            warn(fmt::format("curves for '{}' {}", name, status));
        }
        if (cols.size() == odi::kAllCases.size()) {
            for (std::int64_t x = -1; x <= cfg.curve_max; ++x) {
                body << odi::csv::quote(name) << ',' << x;
                for (const auto& col : cols) body << ',' << fmt::format("{}", x < 0 ? 1.0 : 1.0 - col[static_cast<std::size_t>(x)]);
                body << ",ok\n";
            }
        } else {
            body << odi::csv::quote(name) << ",,,,,," << odi::csv::quote(status) << '\n';
        }
        if (per_file) {
            const auto path = std::filesystem::path(cfg.out_path) / (odi::csv::slug(name) + ".csv");
            std::ofstream f(path);
            if (!f) throw odi::Error(odi::ErrorKind::Io, "cannot write '" + path.string() + "'");
            f << header << body.str();
        } else {
            std::cout << body.str();
        }
    }
    return kExitOk;
}

int cmd_revise(const odi::AppConfig& cfg, const std::string& venue, std::int64_t target) {
    const auto ds = odi::categorize(load_records(cfg));
    if (target < odi::kHighTargetThreshold)
        warn(fmt::format("target {} is below {}; revisions are intended for high first-innings scores", target,
                         odi::kHighTargetThreshold));
    const auto model = odi::build_model(ds, venue, cfg.family, cfg.revision());
    const auto rt = odi::revise_target(model, target, cfg.quantile_cap);
    if (rt.capped) warn("revised target reached the quantile cap");
    Output out(cfg.out_path);
    if (cfg.output_format == odi::OutputFormat::Json) out.stream() << odi::revised_json(rt, model.venue).dump(2) << '\n';
    else odi::write_revised_csv(out.stream(), {{model.venue, rt}});
    return kExitOk;
}

int cmd_table2(const odi::AppConfig& cfg) {
    const auto ds = odi::categorize(load_records(cfg));
    for (auto t : cfg.target_grid)
        if (t < odi::kHighTargetThreshold) warn(fmt::format("target {} is below {}", t, odi::kHighTargetThreshold));
    const auto rep = odi::table2(ds, {odi::kAllFamilies.begin(), odi::kAllFamilies.end()}, cfg.target_grid,
                                 cfg.revision(), cfg.venues);
    if (!rep.note.empty()) warn(rep.note);
    Output out(cfg.out_path);
    if (cfg.output_format == odi::OutputFormat::Json) out.stream() << odi::table2_json(rep).dump(2) << '\n';
    else odi::write_table2_csv(out.stream(), rep);
    return kExitOk;
}

int cmd_simulate(const odi::AppConfig& cfg, const std::string& venue, std::int64_t target, unsigned workers) {
    const auto ds = odi::categorize(load_records(cfg));
    odi::SimConfig sc;
    sc.seed = cfg.seed;
    sc.n_trials = cfg.trials;
    sc.model = odi::build_model(ds, venue, cfg.family, cfg.revision());
    sc.xf = target;
    sc.quantile_cap = cfg.quantile_cap;
    sc.workers = workers;
    const auto r = odi::check_equalization(sc);
    if (r.degenerate) warn("an estimate is 0 or 1; standard errors are degenerate");
    Output out(cfg.out_path);
    out.stream() << odi::sim_json(r).dump(2) << '\n';
    return kExitOk;
}

int cmd_generate(const odi::AppConfig& cfg, const std::string& spec_path, bool template_only) {
    odi::SyntheticSpec spec;
    if (!spec_path.empty()) {
        std::ifstream in(spec_path);
        if (!in) throw odi::Error(odi::ErrorKind::Io, "cannot open '" + spec_path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw odi::Error(odi::ErrorKind::InconsistentSpec, std::string("invalid JSON: ") + e.what());
        }
        spec = odi::spec_from_json(j);
    } else if (!cfg.data_path.empty()) {
        std::vector<std::string> skipped;
        spec = odi::spec_from_dataset(odi::categorize(load_records(cfg)), cfg.family, cfg.revision().fit, &skipped);
        for (const auto& s : skipped) warn("spec skips " + s);
    } else {
        spec = odi::demo_spec();
    }
    Output out(cfg.out_path);
    if (template_only) {
        out.stream() << odi::spec_json(spec).dump(2) << '\n';
        return kExitOk;
    }
    odi::write_matches(out.stream(), odi::generate_synthetic_dataset(spec, cfg.seed));
    return kExitOk;
}

int cmd_validate(const odi::AppConfig& cfg) {
    const auto records = load_records(cfg);
    odi::ValidateConfig vc;
    vc.revision = cfg.revision();
    vc.curve_max = cfg.curve_max;
    const auto rep = odi::validate_dataset(records, vc);
    Output out(cfg.out_path);
    if (cfg.output_format == odi::OutputFormat::Json) {
        auto arr = nlohmann::json::array();
        for (const auto& c : rep.checks)
            arr.push_back({{"check", c.name}, {"status", odi::to_string(c.status)}, {"detail", c.detail}});
        out.stream() << arr.dump(2) << '\n';
    } else {
        for (const auto& c : rep.checks) {
            out.stream() << odi::to_string(c.status) << "  " << c.name;
            if (c.status != odi::CheckStatus::Pass && !c.detail.empty()) out.stream() << "  (" << c.detail << ')';
            out.stream() << '\n';
        }
    }
    std::cerr << fmt::format("{} passed, {} failed, {} skipped\n", rep.count(odi::CheckStatus::Pass),
                             rep.count(odi::CheckStatus::Fail), rep.count(odi::CheckStatus::Skip));
    return rep.ok() ? kExitOk : kExitValidation;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Venue scoring distributions and revised second-innings targets for ODI cricket"};
    app.footer(kExitCodeHelp);
    app.require_subcommand(1);
    app.fallthrough();

    // Global settings. Each maps onto the config-file key of the same name.
    struct Flag {
        const char* key;
        const char* name;
        const char* help;
        std::string value;
        CLI::Option* opt = nullptr;
    };
    std::vector<Flag> flags = {
        {"data", "--data", "Match CSV file", {}},
        {"venues", "--venues", "Comma-separated venue filter (\"overall\" selects the pooled model)", {}},
        {"family", "--family", "Distribution family: nb | normal | logistic (default nb)", {}},
        {"format", "--format", "Output format: csv | json (default csv)", {}},
        {"out", "--out", "Output file (curves: output directory); stdout when omitted", {}},
        {"seed", "--seed", "RNG seed, unsigned 64-bit (default 0)", {}},
        {"target_grid", "--target-grid", "Comma-separated first-innings targets (default 300,315,330,340,350)", {}},
        {"min_sample_size", "--min-sample-size", "Minimum scores per case for fitting (default 10)", {}},
        {"quantile_cap", "--quantile-cap", "Hard cap on quantiles and revised targets, runs (default 2000)", {}},
        {"curve_max", "--curve-max", "Last score emitted by curves (default 600)", {}},
        {"trials", "--trials", "Monte Carlo trials for simulate (default 1000000)", {}},
    };
    for (auto& f : flags) f.opt = app.add_option(f.name, f.value, f.help);
    std::string config_path;
    auto* config_opt = app.add_option("--config", config_path, "key=value configuration file; flags override it");

    std::string venue = std::string(odi::kOverallVenue);
    std::int64_t target = 350;
    unsigned workers = 0;
    std::string spec_path;
    bool template_only = false;

    auto* summary = app.add_subcommand("summary", "Per-venue match summary: counts, win percentages, case averages");
    auto* fitc = app.add_subcommand("fit", "Fit the chosen family to the four case samples of each venue");
    auto* curves = app.add_subcommand("curves", "Survival curves of the four case fits, score -1..curve-max");
    auto* revise = app.add_subcommand("revise", "Revised second-innings target for one venue and first-innings score");
    revise->add_option("--venue", venue, "Venue name or \"overall\"")->required();
    revise->add_option("--target", target, "First-innings score Xf")->required();
    auto* t2 = app.add_subcommand("table2", "Revised targets over the target grid and bias totals for all families");
    auto* sim = app.add_subcommand("simulate", "Monte Carlo check of the revision identity (JSON output)");
    sim->add_option("--venue", venue, "Venue name or \"overall\" (default overall)");
    sim->add_option("--target", target, "First-innings score Xf (default 350)");
    sim->add_option("--workers", workers, "Worker threads; results do not depend on it (default: all cores)");
    auto* gen = app.add_subcommand("generate", "Synthetic match CSV from --spec, from fits of --data, or a demo spec");
    gen->add_option("--spec", spec_path, "Synthetic dataset spec (JSON)");
    gen->add_flag("--spec-template", template_only, "Print the spec that would be used instead of generating");
    auto* val = app.add_subcommand("validate", "Run the invariant suite against --data; exit 4 on any violation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInput;
    }

    try {
        std::vector<std::pair<std::string, std::string>> given;
        for (const auto& f : flags)
            if (f.opt->count() > 0) given.emplace_back(f.key, f.value);
        const auto cfg = odi::resolve_config(config_opt->count() ? std::optional(config_path) : std::nullopt, given);

        if (*summary) return cmd_summary(cfg);
        if (*fitc) return cmd_fit(cfg);
        if (*curves) return cmd_curves(cfg);
        if (*revise) return cmd_revise(cfg, venue, target);
        if (*t2) return cmd_table2(cfg);
        if (*sim) return cmd_simulate(cfg, venue, target, workers);
        if (*gen) return cmd_generate(cfg, spec_path, template_only);
        if (*val) return cmd_validate(cfg);
    } catch (const odi::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}
