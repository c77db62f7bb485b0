// Command-line driver: synthetic generation, single closed-loop runs,
// sparsity sweeps and allocation comparisons.
//
// Exit codes: 0 success, 2 config/parse error, 3 runtime error.
#include "sparsesense/config.hpp"
#include "sparsesense/io.hpp"
#include "sparsesense/simulate.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace sparsesense;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    bool strict = false;
    bool long_format = false;
};

void note(const GlobalOptions &g, const std::string &msg) {
    if (!g.quiet) {
        std::cerr << msg << '\n';
    }
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string &text, const std::string &flag, Parse parse) {
    std::vector<T> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const std::string item = text.substr(start, comma - start);
        if (item.empty()) {
            throw ConfigError(flag + ": empty list item");
        }
        out.push_back(parse(item));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

double to_double(const std::string &s, const std::string &flag) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception &) {
        throw ConfigError(flag + ": expected number, got '" + s + "'");
    }
}

int to_int(const std::string &s, const std::string &flag) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception &) {
        throw ConfigError(flag + ": expected integer, got '" + s + "'");
    }
}

ExperimentConfig load_config(const std::string &path, const GlobalOptions &g) {
    ExperimentConfig cfg = path.empty() ? parse_config_text("", true)
                                        : parse_config(path, g.strict);
    for (const auto &key : cfg.unknown_keys) {
        note(g, "warning: ignoring unknown config key '" + key + "'");
    }
    if (g.seed) {
        cfg.sim.seed = *g.seed;
    }
    return cfg;
}

MeasurementPanel load_panel(const std::string &path, const GlobalOptions &g) {
    return g.long_format ? parse_long_csv(path) : parse_panel_csv(path);
}

// Writes files into an output directory and records them for the manifest.
class OutputDir {
  public:
    explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) {
            throw IoError("cannot create " + dir_.string() + ": " + ec.message());
        }
    }

    void write(const std::string &name, const std::string &content) {
        write_text(dir_ / name, content);
        written_.push_back(name);
    }

    void finish(RunManifest manifest) {
        manifest.finished = utc_timestamp();
        manifest.artifacts = written_;
        manifest.artifacts.push_back("manifest.txt");
        write_text(dir_ / "manifest.txt", manifest.format());
    }

  private:
    fs::path dir_;
    std::vector<std::string> written_;
};

RunManifest start_manifest(const ExperimentConfig &cfg) {
    RunManifest m;
    m.config_checksum = cfg.checksum();
    m.seed = cfg.sim.seed;
    m.started = utc_timestamp();
    return m;
}

void write_traces(OutputDir &out, const ExperimentResult &result) {
    for (const auto &run : result.runs) {
        out.write(fmt::format("series_{}_{:.4f}_r{}.csv", run.strategy, run.param, run.repeat),
                  format_series_csv(run.reports));
    }
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Sparse collaborative sensing: spatial autoregressive prediction with "
                 "closed-loop sensing-task allocation"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Override the configured seed");
    app.add_flag("--quiet", g.quiet, "Suppress progress messages");
    app.add_flag("--strict-config", g.strict, "Reject unknown configuration keys");
    app.add_flag("--long", g.long_format,
                 "Read panels in long format (cycle,station,value)");

    std::string spec_path, config_path, panel_path, out_path;
    std::string sparsities = "0,0.1,0.3,0.5,0.7,0.9";
    std::string predictors = "dsar,ar,persistence,mean";
    std::string strategies = "ewiem,random,static,coverage";
    std::string k_values;
    int repeats = 1;
    bool series = false;

    auto *generate = app.add_subcommand("generate", "Generate a synthetic panel");
    generate->add_option("--spec", spec_path, "Synthetic spec file")->required();
    generate->add_option("--out", out_path, "Output panel CSV")->required();

    auto *run = app.add_subcommand("run", "One closed-loop run");
    run->add_option("--config", config_path, "Experiment config file");
    run->add_option("--panel", panel_path, "Panel CSV")->required();
    run->add_option("--out", out_path, "Output directory")->required();

    auto *sweep = app.add_subcommand("sweep", "Prediction error versus sparsity");
    sweep->add_option("--config", config_path, "Experiment config file");
    sweep->add_option("--panel", panel_path, "Panel CSV")->required();
    sweep->add_option("--sparsities", sparsities, "Comma-separated fractions")
        ->capture_default_str();
    sweep->add_option("--predictors", predictors, "Comma-separated predictors")
        ->capture_default_str();
    sweep->add_option("--repeats", repeats, "Runs per cell")->capture_default_str();
    sweep->add_flag("--series", series, "Also write one series CSV per run");
    sweep->add_option("--out", out_path, "Output directory")->required();

    auto *compare = app.add_subcommand("compare", "Prediction error versus allocation strategy");
    compare->add_option("--config", config_path, "Experiment config file");
    compare->add_option("--panel", panel_path, "Panel CSV")->required();
    compare->add_option("--strategies", strategies, "Comma-separated strategies")
        ->capture_default_str();
    compare->add_option("--k", k_values, "Comma-separated budgets")->required();
    compare->add_option("--repeats", repeats, "Runs per cell")->capture_default_str();
    compare->add_flag("--series", series, "Also write one series CSV per run");
    compare->add_option("--out", out_path, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (generate->parsed()) {
            SyntheticSpec spec = parse_synthetic_spec(spec_path, g.strict);
            if (g.seed) {
                spec.seed = *g.seed;
            }
            const auto result = generate_synthetic(spec);
            const fs::path out(out_path);
            if (out.has_parent_path()) {
                fs::create_directories(out.parent_path());
            }
            write_panel_csv(result.panel, out);
            write_text(out.parent_path() / "truth.csv",
                       format_truth_csv(result.truth, spec.weight_kind, spec.seed));
            note(g, fmt::format("wrote {} ({} locations x {} cycles)", out.string(),
                                result.panel.num_locations(), result.panel.num_cycles()));
        } else if (run->parsed()) {
            const auto cfg = load_config(config_path, g);
            const auto panel = load_panel(panel_path, g);
            OutputDir out(out_path);
            auto manifest = start_manifest(cfg);
            const auto reports = run_closed_loop(panel, cfg.sim);
            std::vector<double> scored;
            for (const auto &r : reports) {
                if (r.scored) {
                    scored.push_back(r.cycle_rmse);
                }
            }
            ReportRow row;
            row.strategy = std::string(to_string(cfg.sim.alloc.strategy));
            row.param = cfg.sim.alloc.resolve_k(panel.num_locations());
            row.mean_rmse = overall_rmse(reports, cfg.sim.pooled);
            row.repeats = 1;
            if (scored.size() > 1) {
                double mean = 0.0;
                for (double v : scored) mean += v;
                mean /= static_cast<double>(scored.size());
                double ss = 0.0;
                for (double v : scored) ss += (v - mean) * (v - mean);
                row.stddev = std::sqrt(ss / static_cast<double>(scored.size() - 1));
            }
            out.write("report.csv", format_report_csv({row}));
            out.write("series.csv", format_series_csv(reports));
            out.finish(manifest);
            note(g, fmt::format("overall rmse {:.4f} over {} cycles", row.mean_rmse,
                                reports.size()));
        } else if (sweep->parsed()) {
            const auto cfg = load_config(config_path, g);
            const auto panel = load_panel(panel_path, g);
            const auto levels = parse_list<double>(
                sparsities, "--sparsities", [](const std::string &s) { return to_double(s, "--sparsities"); });
            const auto kinds = parse_list<PredictorKind>(
                predictors, "--predictors", [](const std::string &s) { return predictor_from_string(s); });
            OutputDir out(out_path);
            auto manifest = start_manifest(cfg);
            const auto result = sparsity_sweep(panel, levels, kinds, cfg.sim, repeats, series);
            out.write("report.csv", format_report_csv(result.rows));
            write_traces(out, result);
            out.finish(manifest);
            note(g, fmt::format("wrote {} rows", result.rows.size()));
        } else if (compare->parsed()) {
            const auto cfg = load_config(config_path, g);
            const auto panel = load_panel(panel_path, g);
            const auto kinds = parse_list<AllocStrategy>(
                strategies, "--strategies", [](const std::string &s) { return alloc_strategy_from_string(s); });
            const auto ks = parse_list<int>(k_values, "--k",
                                            [](const std::string &s) { return to_int(s, "--k"); });
            OutputDir out(out_path);
            auto manifest = start_manifest(cfg);
            const auto result = compare_allocations(panel, kinds, ks, cfg.sim, repeats, series);
            out.write("report.csv", format_report_csv(result.rows));
            write_traces(out, result);
            out.finish(manifest);
            note(g, fmt::format("wrote {} rows", result.rows.size()));
        }
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ParseError &e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError &e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
