#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace fognow::timeutil {

/// Minutes since the Unix epoch, UTC. All series timestamps use this unit.
using Minute = std::int64_t;

struct ParsedTimestamp {
    Minute minute = 0;
    int seconds = 0;  // leftover seconds component, 0..59
};

/// Strict ISO-8601 "YYYY-MM-DDTHH:MM:SSZ". Returns nullopt on any format
/// violation or out-of-range calendar field.
std::optional<ParsedTimestamp> parse_iso_minute(std::string_view text);

/// Inverse of parse_iso_minute for minute-resolution instants (":00Z" seconds).
std::string format_iso_minute(Minute m);

Minute minutes_from_civil(int year, int month, int day, int hour, int minute);

}  // namespace fognow::timeutil
