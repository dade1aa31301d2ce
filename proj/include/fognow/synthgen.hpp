#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fognow/observations.hpp"

namespace fognow::synth {

/// Two-regime (fog/clear) Markov chain driving mean-reverting log-visibility,
/// humidity, dew-point depression and wind, plus sparse rain events. A
/// statistical stand-in for a ship-borne fog record, not a physical model.
struct SynthConfig {
    std::int64_t duration_minutes = 200000;
    std::uint64_t seed = 1;
    double fog_entry_prob = 0.002;  // clear -> fog, per minute
    double fog_exit_prob = 0.004;   // fog -> clear, per minute
    double fog_vis_median_km = 0.22;
    double clear_vis_median_km = 15.0;
    double vis_reversion = 0.018;  // log-space mean reversion, per minute
    double vis_noise = 0.08;       // log-space innovation scale
    double rain_event_rate = 0.0005;  // starts per minute
    double rain_mean_duration = 45.0;  // minutes
    timeutil::Minute start_minute = timeutil::minutes_from_civil(2022, 7, 1, 0, 0);

    void validate() const;  // throws InvalidConfig
};

enum class Regime : std::uint8_t { Clear = 0, Fog = 1 };

struct SynthTruth {
    std::vector<Regime> regime;
    std::vector<std::uint8_t> rain;
};

struct InvalidConfig : std::runtime_error {
    explicit InvalidConfig(const std::string& what) : std::runtime_error(what) {}
};

std::pair<dataio::ObservationSeries, SynthTruth> generate(const SynthConfig& config);

nlohmann::ordered_json config_to_json(const SynthConfig& config);
SynthConfig config_from_json(const nlohmann::json& j);

/// Sidecar CSV: timestamp,regime,rain with regime in {clear,fog}.
void write_truth_csv(std::ostream& out, const dataio::ObservationSeries& series,
                     const SynthTruth& truth);
void write_truth_csv_file(const std::filesystem::path& path,
                          const dataio::ObservationSeries& series, const SynthTruth& truth);

}  // namespace fognow::synth
