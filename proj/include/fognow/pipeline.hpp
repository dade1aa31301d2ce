#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fognow/cgan.hpp"
#include "fognow/eval.hpp"
#include "fognow/gbdt.hpp"
#include "fognow/synthgen.hpp"

namespace fognow::pipeline {

/// Usage / configuration problems; mapped to exit code 2 by the CLI.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// One resolved, reproducible run. The top-level seed is propagated into the
/// module configs, so a (config, seed) pair fully determines every artifact.
struct RunConfig {
    std::string input_csv = "observations.csv";
    std::string out_dir = "out";
    double vis_max_km = 1.0;
    int lead_minutes = 30;
    int lag_minutes = 120;
    std::vector<std::string> variables = {"vis", "wind", "rhw", "dpd"};
    std::vector<std::string> methods = {"cgan", "xgb", "per", "perw"};
    double train_frac = 0.7;
    double valid_frac = 0.15;  // tail share of train rows used for model selection
    double pr_max_mmhr = dataio::kDefaultPrMaxMmHr;
    std::uint64_t seed = 1;
    cgan::CganConfig cgan;
    gbdt::GbdtConfig gbdt;
    synth::SynthConfig synth;

    void validate() const;
    features::LagSpec lag_spec() const;
    bool wants(const std::string& method) const;

    std::filesystem::path train_path() const;
    std::filesystem::path valid_path() const;
    std::filesystem::path test_path() const;
    std::filesystem::path model_path(const std::string& method) const;
    std::filesystem::path report_path() const;
    std::filesystem::path predictions_path(const std::string& method) const;
};

/// Flags override the config file; file paths are kept as given so runs stay
/// relocatable.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

/// Everything semantic (seed, thresholds, module configs) without filesystem
/// paths, so identical runs produce byte-identical artifacts anywhere.
nlohmann::ordered_json provenance_json(const RunConfig& config);

struct StageCounts {
    std::size_t rows_parsed = 0;
    std::size_t seconds_truncated = 0;
    std::size_t after_pr_filter = 0;
    std::size_t after_vis_threshold = 0;
    std::size_t segments = 0;
    std::size_t supervised_rows = 0;
    std::size_t train_rows = 0;
    std::size_t valid_rows = 0;
    std::size_t purged_rows = 0;
    std::size_t test_rows = 0;
};

std::string describe(const StageCounts& counts);

/// synth: writes observations.csv and truth.csv under out_dir.
void run_synth(const RunConfig& config);

/// prepare: filter chain, segmentation, lagging, chronological split; writes
/// train/valid/test sets plus prepare_summary.json.
StageCounts run_prepare(const RunConfig& config);

/// train: fits the requested learned methods (cgan, xgb) from the prepared
/// sets; independent models may train concurrently.
void run_train(const RunConfig& config);

/// evaluate: Per and PerW always, learned methods when their model files are
/// requested; writes the report JSON and per-method prediction CSVs.
eval::EvalReport run_evaluate(const RunConfig& config);

}  // namespace fognow::pipeline
