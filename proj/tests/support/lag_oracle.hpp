// Test-only reference implementations, kept independent of the library's
// index arithmetic: the lag oracle walks a timestamp->index map minute by
// minute instead of reusing Segment bookkeeping.
#pragma once

#include <map>
#include <optional>
#include <random>
#include <vector>

#include "fognow/features.hpp"
#include "fognow/observations.hpp"

namespace testsupport {

struct OracleRow {
    std::vector<double> features;
    double target = 0;
    fognow::timeutil::Minute t_target = 0;
};

inline std::vector<OracleRow> enumerate_lagged_oracle(
    const fognow::dataio::ObservationSeries& series, const fognow::features::LagSpec& spec) {
    std::map<fognow::timeutil::Minute, std::size_t> by_minute;
    for (std::size_t i = 0; i < series.records.size(); ++i)
        by_minute[series.records[i].timestamp] = i;

    std::vector<fognow::features::Var> vars;
    for (const auto& name : spec.variables) vars.push_back(*fognow::features::var_from_name(name));

    std::vector<OracleRow> rows;
    for (const auto& [anchor_minute, anchor_idx] : by_minute) {
        bool ok = true;
        // full lag history and the target must exist as exact minutes
        for (int j = 0; j < spec.lag_minutes && ok; ++j) {
            ok = by_minute.count(anchor_minute - j) > 0;
        }
        // every minute between anchor and target must exist too: a row may not
        // bridge a gap inside its segment
        for (int j = 1; j <= spec.lead_minutes && ok; ++j) {
            ok = by_minute.count(anchor_minute + j) > 0;
        }
        if (!ok) continue;

        OracleRow row;
        for (const auto v : vars) {
            for (int j = spec.lag_minutes - 1; j >= 0; --j) {
                row.features.push_back(
                    fognow::features::field(series.records[by_minute.at(anchor_minute - j)], v));
            }
        }
        const auto& target = series.records[by_minute.at(anchor_minute + spec.lead_minutes)];
        row.target = target.vis;
        row.t_target = target.timestamp;
        rows.push_back(std::move(row));
    }
    return rows;
}

inline fognow::dataio::ObservationSeries make_random_gapped_series(std::mt19937_64& rng,
                                                                   int max_runs = 6,
                                                                   int max_run_len = 40) {
    std::uniform_int_distribution<int> run_count(1, max_runs);
    std::uniform_int_distribution<int> run_len(1, max_run_len);
    std::uniform_int_distribution<int> gap_len(2, 10);
    std::uniform_real_distribution<double> vis(0.01, 9.9);
    std::uniform_real_distribution<double> wind(0.0, 20.0);
    std::uniform_real_distribution<double> rhw(40.0, 102.0);
    std::uniform_real_distribution<double> dpd(-0.5, 8.0);
    std::uniform_real_distribution<double> pr(0.0, 0.04);

    fognow::dataio::ObservationSeries series;
    fognow::timeutil::Minute t = static_cast<fognow::timeutil::Minute>(rng() % 1000);
    const int runs = run_count(rng);
    for (int run = 0; run < runs; ++run) {
        const int n = run_len(rng);
        for (int i = 0; i < n; ++i) {
            fognow::dataio::ObservationRecord rec;
            rec.timestamp = t++;
            rec.vis = vis(rng);
            rec.wind = wind(rng);
            rec.rhw = rhw(rng);
            rec.dpd = dpd(rng);
            rec.pr = pr(rng);
            series.records.push_back(rec);
        }
        t += gap_len(rng);
    }
    return series;
}

inline bool lagged_matches_oracle(const fognow::features::SupervisedSet& set,
                                  const std::vector<OracleRow>& oracle) {
    if (set.rows() != static_cast<Eigen::Index>(oracle.size())) return false;
    for (Eigen::Index r = 0; r < set.rows(); ++r) {
        const auto& row = oracle[static_cast<std::size_t>(r)];
        if (set.cols() != static_cast<Eigen::Index>(row.features.size())) return false;
        for (Eigen::Index c = 0; c < set.cols(); ++c) {
            if (set.x(r, c) != row.features[static_cast<std::size_t>(c)]) return false;
        }
        if (set.y(r) != row.target) return false;
        if (set.t_target[static_cast<std::size_t>(r)] != row.t_target) return false;
    }
    return true;
}

}  // namespace testsupport
