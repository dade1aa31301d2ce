#include "fognow/timeutil.hpp"

#include <array>
#include <cstdio>

namespace fognow::timeutil {

namespace {

// Howard Hinnant's civil-date algorithms; exact for the proleptic Gregorian
// calendar over the full int64 range we care about.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
    int year;
    int month;
    int day;
};

Civil civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return Civil{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

bool is_leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

int days_in_month(int y, int m) {
    static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return kDays[static_cast<std::size_t>(m - 1)];
}

bool all_digits(std::string_view s) {
    for (char c : s) {
        if (c < '0' || c > '9') return false;
    }
    return !s.empty();
}

int to_int(std::string_view s) {
    int v = 0;
    for (char c : s) v = v * 10 + (c - '0');
    return v;
}

}  // namespace

Minute minutes_from_civil(int year, int month, int day, int hour, int minute) {
    return days_from_civil(year, month, day) * 1440 + hour * 60 + minute;
}

std::optional<ParsedTimestamp> parse_iso_minute(std::string_view text) {
    // YYYY-MM-DDTHH:MM:SSZ, exactly 20 characters.
    if (text.size() != 20) return std::nullopt;
    if (text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
        text[16] != ':' || text[19] != 'Z') {
        return std::nullopt;
    }
    const std::string_view ys = text.substr(0, 4), mos = text.substr(5, 2), ds = text.substr(8, 2),
                           hs = text.substr(11, 2), mis = text.substr(14, 2),
                           ss = text.substr(17, 2);
    for (std::string_view part : {ys, mos, ds, hs, mis, ss}) {
        if (!all_digits(part)) return std::nullopt;
    }
    const int year = to_int(ys), month = to_int(mos), day = to_int(ds);
    const int hour = to_int(hs), minute = to_int(mis), second = to_int(ss);
    if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month)) return std::nullopt;
    if (hour > 23 || minute > 59 || second > 59) return std::nullopt;
    return ParsedTimestamp{minutes_from_civil(year, month, day, hour, minute), second};
}

std::string format_iso_minute(Minute m) {
    std::int64_t days = m / 1440;
    std::int64_t rem = m % 1440;
    if (rem < 0) {
        rem += 1440;
        days -= 1;
    }
    const Civil c = civil_from_days(days);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:00Z", c.year, c.month, c.day,
                  static_cast<int>(rem / 60), static_cast<int>(rem % 60));
    return std::string(buf);
}

}  // namespace fognow::timeutil
