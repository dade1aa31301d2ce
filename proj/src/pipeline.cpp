#include "fognow/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>

#include "fognow/baselines.hpp"
#include "fognow/util.hpp"

namespace fognow::pipeline {

namespace {

const std::vector<std::string> kKnownMethods = {"cgan", "xgb", "per", "perw"};

std::string vis_label(double vis_max_km) {
    const double rounded = std::round(vis_max_km);
    if (rounded == vis_max_km) return std::to_string(static_cast<long long>(rounded));
    return util::format_double(vis_max_km);
}

std::string display_name(const std::string& method) {
    if (method == "cgan") return "cGAN";
    if (method == "xgb") return "XGBoost";
    if (method == "per") return "Per";
    if (method == "perw") return "PerW";
    return method;
}

}  // namespace

void RunConfig::validate() const {
    if (!(vis_max_km > 0)) throw ConfigError("vis_max_km must be positive");
    if (lead_minutes < 1) throw ConfigError("lead_minutes must be >= 1");
    if (lag_minutes < 1) throw ConfigError("lag_minutes must be >= 1");
    if (!(train_frac > 0 && train_frac < 1)) throw ConfigError("train_frac must be in (0, 1)");
    if (!(valid_frac >= 0 && valid_frac < 1)) throw ConfigError("valid_frac must be in [0, 1)");
    if (!(pr_max_mmhr > 0)) throw ConfigError("pr_max_mmhr must be positive");
    if (methods.empty()) throw ConfigError("at least one method is required");
    for (const auto& m : methods) {
        if (std::find(kKnownMethods.begin(), kKnownMethods.end(), m) == kKnownMethods.end())
            throw ConfigError("unknown method '" + m + "'");
    }
    try {
        lag_spec().validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

features::LagSpec RunConfig::lag_spec() const {
    features::LagSpec spec;
    spec.lag_minutes = lag_minutes;
    spec.lead_minutes = lead_minutes;
    spec.variables = variables;
    return spec;
}

bool RunConfig::wants(const std::string& method) const {
    return std::find(methods.begin(), methods.end(), method) != methods.end();
}

std::filesystem::path RunConfig::train_path() const {
    return std::filesystem::path(out_dir) / "train_set.bin";
}
std::filesystem::path RunConfig::valid_path() const {
    return std::filesystem::path(out_dir) / "valid_set.bin";
}
std::filesystem::path RunConfig::test_path() const {
    return std::filesystem::path(out_dir) / "test_set.bin";
}
std::filesystem::path RunConfig::model_path(const std::string& method) const {
    return std::filesystem::path(out_dir) / ("model_" + method + ".json");
}
std::filesystem::path RunConfig::report_path() const {
    return std::filesystem::path(out_dir) /
           ("report_" + vis_label(vis_max_km) + "km_" + std::to_string(lead_minutes) +
            "min.json");
}
std::filesystem::path RunConfig::predictions_path(const std::string& method) const {
    return std::filesystem::path(out_dir) / ("preds_" + method + ".csv");
}

RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    c.input_csv = j.value("input_csv", c.input_csv);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.vis_max_km = j.value("vis_max_km", c.vis_max_km);
    c.lead_minutes = j.value("lead_minutes", c.lead_minutes);
    c.lag_minutes = j.value("lag_minutes", c.lag_minutes);
    c.variables = j.value("variables", c.variables);
    c.methods = j.value("methods", c.methods);
    c.train_frac = j.value("train_frac", c.train_frac);
    c.valid_frac = j.value("valid_frac", c.valid_frac);
    c.pr_max_mmhr = j.value("pr_max_mmhr", c.pr_max_mmhr);
    c.seed = j.value("seed", c.seed);
    if (j.contains("cgan")) c.cgan = cgan::config_from_json(j.at("cgan"));
    if (j.contains("gbdt")) c.gbdt = gbdt::config_from_json(j.at("gbdt"));
    if (j.contains("synth")) c.synth = synth::config_from_json(j.at("synth"));
    return c;
}

nlohmann::ordered_json config_to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["input_csv"] = c.input_csv;
    j["out_dir"] = c.out_dir;
    j["vis_max_km"] = c.vis_max_km;
    j["lead_minutes"] = c.lead_minutes;
    j["lag_minutes"] = c.lag_minutes;
    j["variables"] = c.variables;
    j["methods"] = c.methods;
    j["train_frac"] = c.train_frac;
    j["valid_frac"] = c.valid_frac;
    j["pr_max_mmhr"] = c.pr_max_mmhr;
    j["seed"] = c.seed;
    j["cgan"] = cgan::config_to_json(c.cgan);
    j["gbdt"] = gbdt::config_to_json(c.gbdt);
    j["synth"] = synth::config_to_json(c.synth);
    return j;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

nlohmann::ordered_json provenance_json(const RunConfig& config) {
    nlohmann::ordered_json j = config_to_json(config);
    j.erase("input_csv");
    j.erase("out_dir");
    return j;
}

namespace {

// modules draw from the one top-level seed
RunConfig resolved(RunConfig config) {
    config.validate();
    config.synth.seed = config.seed;
    config.cgan.seed = config.seed;
    config.gbdt.seed = config.seed;
    return config;
}

void ensure_out_dir(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);
}

}  // namespace

std::string describe(const StageCounts& c) {
    std::ostringstream os;
    os << "rows parsed:            " << c.rows_parsed << "\n"
       << "  seconds truncated:    " << c.seconds_truncated << "\n"
       << "after PR filter:        " << c.after_pr_filter << "\n"
       << "after Vis threshold:    " << c.after_vis_threshold << "\n"
       << "contiguous segments:    " << c.segments << "\n"
       << "supervised rows:        " << c.supervised_rows << "\n"
       << "  train rows:           " << c.train_rows << "\n"
       << "  validation rows:      " << c.valid_rows << "\n"
       << "  purged rows:          " << c.purged_rows << "\n"
       << "  test rows:            " << c.test_rows << "\n";
    return os.str();
}

void run_synth(const RunConfig& raw) {
    const RunConfig config = resolved(raw);
    const auto min_minutes =
        static_cast<std::int64_t>(config.lag_minutes) + config.lead_minutes + 1;
    if (config.synth.duration_minutes < min_minutes) {
        throw ConfigError("duration_minutes must be >= lag + lead + 1 = " +
                          std::to_string(min_minutes));
    }
    const auto [series, truth] = synth::generate(config.synth);
    ensure_out_dir(config);
    dataio::write_csv_file(std::filesystem::path(config.out_dir) / "observations.csv", series);
    synth::write_truth_csv_file(std::filesystem::path(config.out_dir) / "truth.csv", series,
                                truth);
}

StageCounts run_prepare(const RunConfig& raw) {
    const RunConfig config = resolved(raw);
    StageCounts counts;

    const dataio::ParseResult parsed = dataio::parse_csv_file(config.input_csv);
    counts.rows_parsed = parsed.rows_parsed;
    counts.seconds_truncated = parsed.seconds_truncated;

    const auto rain_free = dataio::filter_precipitation(parsed.series, config.pr_max_mmhr);
    counts.after_pr_filter = rain_free.size();
    const auto visible = dataio::threshold_visibility(rain_free, config.vis_max_km);
    counts.after_vis_threshold = visible.size();

    const auto segments = dataio::segment_contiguous(visible);
    counts.segments = segments.size();

    const auto set = features::build_lagged(segments, visible, config.lag_spec());
    counts.supervised_rows = static_cast<std::size_t>(set.rows());
    if (set.rows() == 0)
        throw std::runtime_error("no supervised rows; series too short or too fragmented");

    const auto labels = features::chrono_split(set, config.train_frac);
    const auto train_idx = labels.indices_of(features::RowSplit::Train);
    const auto test_idx = labels.indices_of(features::RowSplit::Test);
    counts.purged_rows = labels.indices_of(features::RowSplit::Purged).size();
    counts.test_rows = test_idx.size();

    // validation tail comes out of the train block, newest rows first
    const std::size_t n_valid =
        static_cast<std::size_t>(config.valid_frac * static_cast<double>(train_idx.size()));
    const std::size_t n_train = train_idx.size() - n_valid;
    if (n_train == 0) throw features::DegenerateSplit("validation carve leaves no train rows");
    const std::vector<Eigen::Index> core_idx(train_idx.begin(),
                                             train_idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    const std::vector<Eigen::Index> valid_idx(train_idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                                              train_idx.end());
    counts.train_rows = core_idx.size();
    counts.valid_rows = valid_idx.size();

    ensure_out_dir(config);
    features::save_set(config.train_path(), features::subset(set, core_idx));
    features::save_set(config.valid_path(), features::subset(set, valid_idx));
    features::save_set(config.test_path(), features::subset(set, test_idx));

    nlohmann::ordered_json summary;
    summary["counts"] = {{"rows_parsed", counts.rows_parsed},
                         {"seconds_truncated", counts.seconds_truncated},
                         {"after_pr_filter", counts.after_pr_filter},
                         {"after_vis_threshold", counts.after_vis_threshold},
                         {"segments", counts.segments},
                         {"supervised_rows", counts.supervised_rows},
                         {"train_rows", counts.train_rows},
                         {"valid_rows", counts.valid_rows},
                         {"purged_rows", counts.purged_rows},
                         {"test_rows", counts.test_rows}};
    summary["provenance"] = provenance_json(config);
    std::ofstream out(std::filesystem::path(config.out_dir) / "prepare_summary.json",
                      std::ios::binary);
    out << summary.dump(2) << '\n';
    return counts;
}

void run_train(const RunConfig& raw) {
    const RunConfig config = resolved(raw);
    const bool want_cgan = config.wants("cgan");
    const bool want_xgb = config.wants("xgb");
    if (!want_cgan && !want_xgb) return;

    const auto train = features::load_set(config.train_path());
    const auto valid = features::load_set(config.valid_path());

    auto fit_xgb = [&]() {
        const auto model = gbdt::fit_gbdt(train, valid, config.gbdt);
        gbdt::save_model(config.model_path("xgb"), model);
    };

    if (want_cgan && want_xgb) {
        auto xgb_done = std::async(std::launch::async, fit_xgb);
        const auto model = cgan::train_cgan(train, valid, config.cgan);
        cgan::save_model(config.model_path("cgan"), model);
        xgb_done.get();
    } else if (want_xgb) {
        fit_xgb();
    } else {
        const auto model = cgan::train_cgan(train, valid, config.cgan);
        cgan::save_model(config.model_path("cgan"), model);
    }
}

eval::EvalReport run_evaluate(const RunConfig& raw) {
    const RunConfig config = resolved(raw);
    const auto test = features::load_set(config.test_path());

    std::vector<eval::MethodPredictions> methods;
    if (config.wants("xgb")) {
        const auto model = gbdt::load_model(config.model_path("xgb"));
        methods.push_back({display_name("xgb"), gbdt::predict_gbdt(model, test.x)});
    }
    if (config.wants("cgan")) {
        const auto model = cgan::load_model(config.model_path("cgan"));
        methods.push_back({display_name("cgan"), cgan::predict_point(model, test.x)});
    }
    // the naive baselines are free; every report carries them
    methods.push_back({display_name("per"), baselines::persistence(test).predictions});
    methods.push_back({display_name("perw"), baselines::persistence_window(test).predictions});

    const std::string level = config.vis_max_km == 1.0    ? "sub1km"
                              : config.vis_max_km == 10.0 ? "sub10km"
                                                          : "sub" + vis_label(config.vis_max_km) + "km";
    eval::EvalReport report = eval::build_report(level, config.lead_minutes, test.y, methods,
                                                 provenance_json(config));
    ensure_out_dir(config);
    eval::write_report(config.report_path(), report);

    for (const auto& m : methods) {
        std::string key;
        for (const auto& k : kKnownMethods) {
            if (display_name(k) == m.name) key = k;
        }
        std::ofstream out(config.predictions_path(key), std::ios::binary);
        eval::write_predictions_csv(out, test.t_target, test.y, m.pred, m.name);
    }
    return report;
}

}  // namespace fognow::pipeline
