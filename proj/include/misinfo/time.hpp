#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace misinfo {

using Timestamp = std::chrono::sys_seconds;

inline constexpr std::int64_t kSecondsPerDay = 86400;

// Half-open analysis window [start, end) in UTC.
struct Window {
  Timestamp start;
  Timestamp end;

  bool contains(Timestamp t) const { return t >= start && t < end; }
  // UTC day offset of t from the day containing start.
  std::int64_t day_index(Timestamp t) const;
  std::int64_t num_days() const;
};

// Accepts ISO-8601 ("2020-03-01", "2020-03-01T12:00:00Z",
// "2020-03-01 12:00:00+02:00", fractional seconds are truncated), bare epoch
// seconds, and the Twitter v1 form "Wed Oct 10 20:19:24 +0000 2018".
std::optional<Timestamp> parse_timestamp(std::string_view text);

// "2020-01-01..2020-09-30" with both days inclusive; the stored end is the
// midnight after the last day.
Window parse_window(std::string_view text);

std::string format_timestamp(Timestamp t);
std::string format_date(Timestamp t);
std::string format_window(const Window& window);

}  // namespace misinfo
