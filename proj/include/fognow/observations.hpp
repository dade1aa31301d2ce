#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fognow/timeutil.hpp"

namespace fognow::dataio {

/// One per-minute meteorological observation.
struct ObservationRecord {
    timeutil::Minute timestamp = 0;  // UTC, minute resolution
    double vis = 0;                  // visibility, km
    double wind = 0;                 // horizontal wind speed, m/s
    double rhw = 0;                  // relative humidity w.r.t. water, %
    double dpd = 0;                  // dew point depression, deg C
    double pr = 0;                   // precipitation rate, mm/hr
};

/// Time-ordered observation sequence. Timestamps strictly increase.
struct ObservationSeries {
    std::vector<ObservationRecord> records;
    std::string source_id;

    std::size_t size() const { return records.size(); }
};

/// Half-open index range [begin, end) whose timestamps are consecutive minutes.
struct Segment {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
};

struct MalformedHeader : std::runtime_error {
    explicit MalformedHeader(const std::string& what) : std::runtime_error(what) {}
};

struct BadRow : std::runtime_error {
    BadRow(std::size_t line_number, const std::string& reason);
    std::size_t line;
};

struct DuplicateTimestamp : std::runtime_error {
    explicit DuplicateTimestamp(timeutil::Minute t);
    timeutil::Minute timestamp;
};

struct NonMonotonicAfterSort : std::runtime_error {
    NonMonotonicAfterSort() : std::runtime_error("timestamps not strictly increasing after sort") {}
};

struct NonPositiveThreshold : std::runtime_error {
    explicit NonPositiveThreshold(double v);
};

inline constexpr std::string_view kCsvHeader = "timestamp,vis_km,wind_ms,rhw_pct,dpd_c,pr_mmhr";
inline constexpr double kDefaultPrMaxMmHr = 0.05;

/// Reason the record violates its physical-range invariants, or nullopt.
std::optional<std::string> validate_record(const ObservationRecord& rec);

struct ParseResult {
    ObservationSeries series;
    std::size_t rows_parsed = 0;
    std::size_t seconds_truncated = 0;  // rows whose timestamp carried nonzero seconds
};

/// Parses the CSV schema above. Rows may arrive unsorted; the result is sorted
/// by timestamp. Invalid rows and duplicate timestamps are errors, not skips.
ParseResult parse_csv(std::istream& in, std::string source_id = {});
ParseResult parse_csv_file(const std::filesystem::path& path);

void write_csv(std::ostream& out, const ObservationSeries& series);
void write_csv_file(const std::filesystem::path& path, const ObservationSeries& series);

/// Keeps records with pr strictly below pr_max.
ObservationSeries filter_precipitation(const ObservationSeries& series,
                                       double pr_max = kDefaultPrMaxMmHr);

/// Keeps records with vis strictly below vis_max.
ObservationSeries threshold_visibility(const ObservationSeries& series, double vis_max);

/// Partitions the series into maximal runs of consecutive-minute timestamps.
std::vector<Segment> segment_contiguous(const ObservationSeries& series);

}  // namespace fognow::dataio
