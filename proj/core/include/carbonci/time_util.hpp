#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

namespace carbonci {

/// All timestamps in the engine are UTC instants at one-second granularity.
using TimePoint = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

constexpr Seconds kSecondsPerDay{86400};

/// Parses an ISO-8601 UTC timestamp: "YYYY-MM-DDTHH:MM:SS" with an optional
/// "Z" or "+00:00" suffix and an optional space instead of the 'T'.
/// Non-UTC offsets are rejected.
std::optional<TimePoint> try_parse_timestamp(const std::string& text);

/// Like try_parse_timestamp but throws Errc::MalformedRow on failure.
TimePoint parse_timestamp(const std::string& text);

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(TimePoint t);

/// Seconds elapsed since UTC midnight, in [0, 86400).
Seconds seconds_of_day(TimePoint t);

/// UTC midnight of the day containing t.
TimePoint start_of_day(TimePoint t);

/// Circular distance between two times of day, in [0, 43200].
Seconds time_of_day_distance(Seconds a, Seconds b);

}  // namespace carbonci
