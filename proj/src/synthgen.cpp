#include "fognow/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>

namespace fognow::synth {

void SynthConfig::validate() const {
    if (duration_minutes < 1) throw InvalidConfig("duration_minutes must be >= 1");
    for (const double p : {fog_entry_prob, fog_exit_prob}) {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidConfig("transition probabilities must be in [0, 1]");
    }
    if (!(fog_vis_median_km > 0) || !(clear_vis_median_km > 0))
        throw InvalidConfig("visibility medians must be > 0");
    if (!(vis_reversion > 0 && vis_reversion <= 1))
        throw InvalidConfig("vis_reversion must be in (0, 1]");
    if (!(vis_noise >= 0)) throw InvalidConfig("vis_noise must be >= 0");
    if (!(rain_event_rate >= 0 && rain_event_rate <= 1))
        throw InvalidConfig("rain_event_rate must be in [0, 1]");
    if (!(rain_mean_duration >= 1)) throw InvalidConfig("rain_mean_duration must be >= 1");
}

namespace {

// per-regime targets for the slow states
struct RegimeLevels {
    double log_vis;
    double rhw;
    double dpd;
    double wind;
};

}  // namespace

std::pair<dataio::ObservationSeries, SynthTruth> generate(const SynthConfig& config) {
    config.validate();

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    const RegimeLevels fog{std::log(config.fog_vis_median_km), 99.0, 0.25, 5.0};
    const RegimeLevels clear{std::log(config.clear_vis_median_km), 80.0, 3.5, 7.0};

    // slow-state dynamics shared by both regimes
    const double rhw_reversion = 0.08, rhw_noise_fog = 0.15, rhw_noise_clear = 1.0;
    const double dpd_reversion = 0.08, dpd_noise_fog = 0.03, dpd_noise_clear = 0.30;
    const double wind_reversion = 0.02, wind_noise = 0.25;

    const double stationary_fog =
        config.fog_entry_prob + config.fog_exit_prob > 0
            ? config.fog_entry_prob / (config.fog_entry_prob + config.fog_exit_prob)
            : 0.0;
    const double vis_stat_sd =
        config.vis_noise / std::sqrt(std::max(1e-12, 2.0 * config.vis_reversion -
                                                          config.vis_reversion * config.vis_reversion));

    Regime regime = uniform(rng) < stationary_fog ? Regime::Fog : Regime::Clear;
    const auto levels_of = [&](Regime r) -> const RegimeLevels& {
        return r == Regime::Fog ? fog : clear;
    };

    double log_vis = levels_of(regime).log_vis + vis_stat_sd * normal(rng);
    double rhw = levels_of(regime).rhw;
    double dpd = levels_of(regime).dpd;
    double wind = levels_of(regime).wind;

    bool raining = false;
    std::int64_t rain_left = 0;

    dataio::ObservationSeries series;
    series.source_id = "synthetic seed=" + std::to_string(config.seed);
    series.records.reserve(static_cast<std::size_t>(config.duration_minutes));
    SynthTruth truth;
    truth.regime.reserve(static_cast<std::size_t>(config.duration_minutes));
    truth.rain.reserve(static_cast<std::size_t>(config.duration_minutes));

    for (std::int64_t t = 0; t < config.duration_minutes; ++t) {
        // regime chain
        const double flip = uniform(rng);
        if (regime == Regime::Clear) {
            if (flip < config.fog_entry_prob) regime = Regime::Fog;
        } else {
            if (flip < config.fog_exit_prob) regime = Regime::Clear;
        }
        const RegimeLevels& lv = levels_of(regime);

        // rain events: geometric duration, sampled per minute
        if (raining) {
            if (--rain_left <= 0) raining = false;
        } else if (uniform(rng) < config.rain_event_rate) {
            raining = true;
            std::geometric_distribution<std::int64_t> dur(1.0 / config.rain_mean_duration);
            rain_left = 1 + dur(rng);
        }

        log_vis += config.vis_reversion * (lv.log_vis - log_vis) + config.vis_noise * normal(rng);
        rhw += rhw_reversion * (lv.rhw - rhw) +
               (regime == Regime::Fog ? rhw_noise_fog : rhw_noise_clear) * normal(rng);
        rhw = std::clamp(rhw, 0.0, 102.0);
        dpd += dpd_reversion * (lv.dpd - dpd) +
               (regime == Regime::Fog ? dpd_noise_fog : dpd_noise_clear) * normal(rng);
        dpd = std::max(dpd, -0.4);
        wind += wind_reversion * (lv.wind - wind) + wind_noise * normal(rng);
        wind = std::max(wind, 0.0);

        double pr = 0.0;
        if (raining) pr = 0.06 + 1.5 * std::abs(normal(rng));

        dataio::ObservationRecord rec;
        rec.timestamp = config.start_minute + t;
        rec.vis = std::exp(log_vis);
        rec.wind = wind;
        rec.rhw = rhw;
        rec.dpd = dpd;
        rec.pr = pr;
        series.records.push_back(rec);
        truth.regime.push_back(regime);
        truth.rain.push_back(raining ? 1 : 0);
    }
    return {std::move(series), std::move(truth)};
}

nlohmann::ordered_json config_to_json(const SynthConfig& c) {
    nlohmann::ordered_json j;
    j["duration_minutes"] = c.duration_minutes;
    j["seed"] = c.seed;
    j["fog_entry_prob"] = c.fog_entry_prob;
    j["fog_exit_prob"] = c.fog_exit_prob;
    j["fog_vis_median_km"] = c.fog_vis_median_km;
    j["clear_vis_median_km"] = c.clear_vis_median_km;
    j["vis_reversion"] = c.vis_reversion;
    j["vis_noise"] = c.vis_noise;
    j["rain_event_rate"] = c.rain_event_rate;
    j["rain_mean_duration"] = c.rain_mean_duration;
    j["start"] = timeutil::format_iso_minute(c.start_minute);
    return j;
}

SynthConfig config_from_json(const nlohmann::json& j) {
    SynthConfig c;
    c.duration_minutes = j.value("duration_minutes", c.duration_minutes);
    c.seed = j.value("seed", c.seed);
    c.fog_entry_prob = j.value("fog_entry_prob", c.fog_entry_prob);
    c.fog_exit_prob = j.value("fog_exit_prob", c.fog_exit_prob);
    c.fog_vis_median_km = j.value("fog_vis_median_km", c.fog_vis_median_km);
    c.clear_vis_median_km = j.value("clear_vis_median_km", c.clear_vis_median_km);
    c.vis_reversion = j.value("vis_reversion", c.vis_reversion);
    c.vis_noise = j.value("vis_noise", c.vis_noise);
    c.rain_event_rate = j.value("rain_event_rate", c.rain_event_rate);
    c.rain_mean_duration = j.value("rain_mean_duration", c.rain_mean_duration);
    if (j.contains("start")) {
        const auto parsed = timeutil::parse_iso_minute(j.at("start").get<std::string>());
        if (!parsed) throw InvalidConfig("bad start timestamp");
        c.start_minute = parsed->minute;
    }
    return c;
}

void write_truth_csv(std::ostream& out, const dataio::ObservationSeries& series,
                     const SynthTruth& truth) {
    out << "timestamp,regime,rain\n";
    for (std::size_t i = 0; i < series.records.size(); ++i) {
        out << timeutil::format_iso_minute(series.records[i].timestamp) << ','
            << (truth.regime[i] == Regime::Fog ? "fog" : "clear") << ','
            << static_cast<int>(truth.rain[i]) << '\n';
    }
}

void write_truth_csv_file(const std::filesystem::path& path,
                          const dataio::ObservationSeries& series, const SynthTruth& truth) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_truth_csv(out, series, truth);
}

}  // namespace fognow::synth
