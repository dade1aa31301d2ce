#include "fognow/observations.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "fognow/util.hpp"

namespace fognow::dataio {

BadRow::BadRow(std::size_t line_number, const std::string& reason)
    : std::runtime_error("row " + std::to_string(line_number) + ": " + reason),
      line(line_number) {}

DuplicateTimestamp::DuplicateTimestamp(timeutil::Minute t)
    : std::runtime_error("duplicate timestamp " + timeutil::format_iso_minute(t)), timestamp(t) {}

NonPositiveThreshold::NonPositiveThreshold(double v)
    : std::runtime_error("visibility threshold must be positive, got " + util::format_double(v)) {}

std::optional<std::string> validate_record(const ObservationRecord& rec) {
    if (!(rec.vis >= 0)) return "vis must be >= 0";
    if (!(rec.pr >= 0)) return "pr must be >= 0";
    if (!(rec.rhw >= 0 && rec.rhw <= 102)) return "rhw must be in [0, 102]";
    if (!(rec.dpd >= -0.5)) return "dpd must be >= -0.5";
    return std::nullopt;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

}  // namespace

ParseResult parse_csv(std::istream& in, std::string source_id) {
    std::string line;
    if (!std::getline(in, line)) throw MalformedHeader("empty input, header row required");
    if (strip_cr(line) != kCsvHeader) {
        throw MalformedHeader("expected header '" + std::string(kCsvHeader) + "', got '" + line +
                              "'");
    }

    ParseResult result;
    result.series.source_id = std::move(source_id);
    std::size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string_view body = strip_cr(line);
        if (body.empty()) continue;
        const auto fields = split_fields(body);
        if (fields.size() != 6) {
            throw BadRow(line_number,
                         "expected 6 fields, got " + std::to_string(fields.size()));
        }
        const auto ts = timeutil::parse_iso_minute(fields[0]);
        if (!ts) throw BadRow(line_number, "unparseable timestamp '" + std::string(fields[0]) + "'");
        ObservationRecord rec;
        rec.timestamp = ts->minute;
        if (ts->seconds != 0) ++result.seconds_truncated;

        const std::array<double*, 5> slots = {&rec.vis, &rec.wind, &rec.rhw, &rec.dpd, &rec.pr};
        static constexpr std::array<std::string_view, 5> names = {"vis_km", "wind_ms", "rhw_pct",
                                                                  "dpd_c", "pr_mmhr"};
        for (std::size_t i = 0; i < slots.size(); ++i) {
            const auto v = util::parse_double(fields[i + 1]);
            if (!v) {
                throw BadRow(line_number, "unparseable " + std::string(names[i]) + " '" +
                                              std::string(fields[i + 1]) + "'");
            }
            *slots[i] = *v;
        }
        if (const auto reason = validate_record(rec)) throw BadRow(line_number, *reason);
        result.series.records.push_back(rec);
        ++result.rows_parsed;
    }

    auto& recs = result.series.records;
    std::stable_sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) {
        return a.timestamp < b.timestamp;
    });
    for (std::size_t i = 1; i < recs.size(); ++i) {
        if (recs[i].timestamp == recs[i - 1].timestamp)
            throw DuplicateTimestamp(recs[i].timestamp);
        if (recs[i].timestamp < recs[i - 1].timestamp) throw NonMonotonicAfterSort();
    }
    return result;
}

ParseResult parse_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return parse_csv(in, path.filename().string());
}

void write_csv(std::ostream& out, const ObservationSeries& series) {
    out << kCsvHeader << '\n';
    for (const auto& r : series.records) {
        out << timeutil::format_iso_minute(r.timestamp) << ',' << util::format_double(r.vis) << ','
            << util::format_double(r.wind) << ',' << util::format_double(r.rhw) << ','
            << util::format_double(r.dpd) << ',' << util::format_double(r.pr) << '\n';
    }
}

void write_csv_file(const std::filesystem::path& path, const ObservationSeries& series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_csv(out, series);
}

ObservationSeries filter_precipitation(const ObservationSeries& series, double pr_max) {
    ObservationSeries out;
    out.source_id = series.source_id;
    out.records.reserve(series.records.size());
    for (const auto& r : series.records) {
        if (r.pr < pr_max) out.records.push_back(r);
    }
    return out;
}

ObservationSeries threshold_visibility(const ObservationSeries& series, double vis_max) {
    if (!(vis_max > 0)) throw NonPositiveThreshold(vis_max);
    ObservationSeries out;
    out.source_id = series.source_id;
    out.records.reserve(series.records.size());
    for (const auto& r : series.records) {
        if (r.vis < vis_max) out.records.push_back(r);
    }
    return out;
}

std::vector<Segment> segment_contiguous(const ObservationSeries& series) {
    std::vector<Segment> segments;
    const auto& recs = series.records;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= recs.size(); ++i) {
        if (i == recs.size() || recs[i].timestamp != recs[i - 1].timestamp + 1) {
            segments.push_back(Segment{start, i});
            start = i;
        }
    }
    return segments;
}

}  // namespace fognow::dataio
