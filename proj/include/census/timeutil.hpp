#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace census {

/// Seconds since the Unix epoch, UTC.
using EpochSeconds = std::int64_t;

/// Parses ISO-8601 "YYYY-MM-DDTHH:MM:SS" followed by "Z" or a "+HH:MM" /
/// "-HH:MM" offset. Fractional seconds are rejected. Returns nullopt when
/// the text is malformed or names an invalid calendar instant.
std::optional<EpochSeconds> parse_iso8601(std::string_view text);

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601_utc(EpochSeconds t);

/// Formats in the given fixed offset, e.g. "2016-03-01T09:15:00+03:00".
std::string format_iso8601(EpochSeconds t, int offset_minutes);

/// floor(t / 60)
inline std::int64_t epoch_minute(EpochSeconds t) {
  return t >= 0 ? t / 60 : -((-t + 59) / 60);
}

/// Seconds past local midnight for a fixed UTC offset.
inline int local_second_of_day(EpochSeconds t, int offset_minutes) {
  std::int64_t local = t + std::int64_t{offset_minutes} * 60;
  std::int64_t r = local % 86400;
  if (r < 0) r += 86400;
  return static_cast<int>(r);
}

/// Parses "HH:MM" or "HH:MM:SS" into seconds past midnight.
std::optional<int> parse_clock(std::string_view text);

}  // namespace census
