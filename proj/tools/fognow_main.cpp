#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "fognow/eval.hpp"
#include "fognow/pipeline.hpp"

namespace {

using fognow::pipeline::ConfigError;
using fognow::pipeline::RunConfig;

struct Flags {
    std::string config_path;
    std::string out_dir;
    std::string input_csv;
    std::uint64_t seed = 0;
    double vis_max = 0;
    int lead = 0;
    int lag = 0;
    std::int64_t minutes = 0;
    std::vector<std::string> methods;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config_path, "JSON run configuration; flags override it");
    cmd->add_option("--seed", f.seed, "master RNG seed, recorded in every output");
    cmd->add_option("--vis-max", f.vis_max, "visibility threshold, km (1 or 10)");
    cmd->add_option("--lead", f.lead, "lead time, minutes (30 or 60)");
    cmd->add_option("--lag", f.lag, "lookback window, minutes");
    cmd->add_option("--out", f.out_dir, "output directory");
    cmd->add_option("--methods", f.methods, "subset of cgan,xgb,per,perw")->delimiter(',');
}

RunConfig resolve(const CLI::App* cmd, const Flags& f) {
    RunConfig cfg;
    if (cmd->count("--config")) cfg = fognow::pipeline::load_config(f.config_path);
    if (cmd->count("--seed")) cfg.seed = f.seed;
    if (cmd->count("--vis-max")) {
        if (f.vis_max != 1.0 && f.vis_max != 10.0)
            throw ConfigError("--vis-max must be 1 or 10");
        cfg.vis_max_km = f.vis_max;
    }
    if (cmd->count("--lead")) {
        if (f.lead != 30 && f.lead != 60) throw ConfigError("--lead must be 30 or 60");
        cfg.lead_minutes = f.lead;
    }
    if (cmd->count("--lag")) {
        if (f.lag < 1) throw ConfigError("--lag must be >= 1");
        cfg.lag_minutes = f.lag;
    }
    if (cmd->count("--out")) cfg.out_dir = f.out_dir;
    if (cmd->count("--methods")) cfg.methods = f.methods;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"marine fog visibility nowcasting pipeline"};
    app.require_subcommand(1);
    Flags flags;
    std::string report_file;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic observation CSV");
    add_common(synth, flags);
    synth->add_option("--minutes", flags.minutes, "series length in minutes");

    CLI::App* prepare =
        app.add_subcommand("prepare", "filter, lag and split an observation CSV");
    add_common(prepare, flags);
    prepare->add_option("--input", flags.input_csv, "observation CSV path");

    CLI::App* train = app.add_subcommand("train", "fit the requested learned methods");
    add_common(train, flags);

    CLI::App* evaluate =
        app.add_subcommand("evaluate", "score all methods on the test split, write the report");
    add_common(evaluate, flags);

    CLI::App* report = app.add_subcommand("report", "pretty-print a stored report JSON");
    report->add_option("report_json", report_file, "report JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (report->parsed()) {
            std::cout << fognow::eval::render_table(fognow::eval::read_report(report_file));
            return 0;
        }
        if (synth->parsed()) {
            RunConfig cfg = resolve(synth, flags);
            if (synth->count("--minutes")) cfg.synth.duration_minutes = flags.minutes;
            fognow::pipeline::run_synth(cfg);
            std::cout << "wrote " << (std::filesystem::path(cfg.out_dir) / "observations.csv").string()
                      << " (" << cfg.synth.duration_minutes << " minutes, seed " << cfg.seed
                      << ")\n";
        } else if (prepare->parsed()) {
            RunConfig cfg = resolve(prepare, flags);
            if (prepare->count("--input")) cfg.input_csv = flags.input_csv;
            const auto counts = fognow::pipeline::run_prepare(cfg);
            std::cout << fognow::pipeline::describe(counts);
        } else if (train->parsed()) {
            RunConfig cfg = resolve(train, flags);
            fognow::pipeline::run_train(cfg);
            for (const auto& m : cfg.methods) {
                if (m == "cgan" || m == "xgb")
                    std::cout << "wrote " << cfg.model_path(m).string() << "\n";
            }
        } else if (evaluate->parsed()) {
            RunConfig cfg = resolve(evaluate, flags);
            const auto rep = fognow::pipeline::run_evaluate(cfg);
            std::cout << "wrote " << cfg.report_path().string() << "\n\n"
                      << fognow::eval::render_table(rep);
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const fognow::synth::InvalidConfig& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
