#include "misinfo/time.hpp"

#include <array>
#include <charconv>
#include <cstdio>

#include "misinfo/error.hpp"

namespace misinfo {
namespace {

using std::chrono::days;
using std::chrono::seconds;
using std::chrono::sys_days;

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
  return ec == std::errc{};
}

std::optional<sys_days> make_day(int y, int m, int d) {
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd};
}

// "+hh:mm", "+hhmm", "+hh" -> offset in seconds east of UTC.
std::optional<std::int64_t> parse_offset(std::string_view text) {
  if (text.empty() || (text[0] != '+' && text[0] != '-')) return std::nullopt;
  const int sign = text[0] == '-' ? -1 : 1;
  text.remove_prefix(1);
  int hh = 0;
  int mm = 0;
  if (!read_int(text, 0, 2, hh)) return std::nullopt;
  if (text.size() == 2) {
  } else if (text.size() == 5 && text[2] == ':' && read_int(text, 3, 2, mm)) {
  } else if (text.size() == 4 && read_int(text, 2, 2, mm)) {
  } else {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59) return std::nullopt;
  return sign * (hh * 3600 + mm * 60);
}

std::optional<Timestamp> parse_iso(std::string_view text) {
  int y = 0, mo = 0, d = 0;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, mo) || !read_int(text, 8, 2, d)) {
    return std::nullopt;
  }
  auto day = make_day(y, mo, d);
  if (!day) return std::nullopt;
  Timestamp result{*day};
  if (text.size() == 10) return result;
  if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
  int hh = 0, mi = 0, ss = 0;
  if (!read_int(text, 11, 2, hh) || text.size() < 16 || text[13] != ':' ||
      !read_int(text, 14, 2, mi)) {
    return std::nullopt;
  }
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    if (!read_int(text, pos + 1, 2, ss)) return std::nullopt;
    pos += 3;
  }
  if (hh > 23 || mi > 59 || ss > 60) return std::nullopt;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    const std::size_t digits_start = pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    if (pos == digits_start) return std::nullopt;
  }
  result += seconds{hh * 3600 + mi * 60 + ss};
  const std::string_view zone = text.substr(pos);
  if (zone.empty() || zone == "Z" || zone == "z") return result;
  auto offset = parse_offset(zone);
  if (!offset) return std::nullopt;
  return result - seconds{*offset};
}

constexpr std::array<std::string_view, 12> kMonths = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                     "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

// "Wed Oct 10 20:19:24 +0000 2018"
std::optional<Timestamp> parse_twitter(std::string_view text) {
  if (text.size() != 30 || text[3] != ' ' || text[7] != ' ' || text[10] != ' ' ||
      text[19] != ' ' || text[25] != ' ') {
    return std::nullopt;
  }
  int month = 0;
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    if (text.substr(4, 3) == kMonths[i]) month = static_cast<int>(i) + 1;
  }
  int d = 0, hh = 0, mi = 0, ss = 0, y = 0;
  if (month == 0 || !read_int(text, 8, 2, d) || !read_int(text, 11, 2, hh) || text[13] != ':' ||
      !read_int(text, 14, 2, mi) || text[16] != ':' || !read_int(text, 17, 2, ss) ||
      !read_int(text, 26, 4, y)) {
    return std::nullopt;
  }
  auto day = make_day(y, month, d);
  auto offset = parse_offset(text.substr(20, 5));
  if (!day || !offset || hh > 23 || mi > 59 || ss > 60) return std::nullopt;
  return Timestamp{*day} + seconds{hh * 3600 + mi * 60 + ss - *offset};
}

std::optional<Timestamp> parse_epoch(std::string_view text) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return Timestamp{seconds{value}};
}

}  // namespace

std::int64_t Window::day_index(Timestamp t) const {
  const auto first = std::chrono::floor<days>(start);
  return std::chrono::floor<days>(t - first).count();
}

std::int64_t Window::num_days() const {
  const auto first = std::chrono::floor<days>(start);
  const auto last = std::chrono::ceil<days>(end);
  return (last - first).count();
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  if (auto epoch = parse_epoch(text)) return epoch;
  if (auto iso = parse_iso(text)) return iso;
  return parse_twitter(text);
}

Window parse_window(std::string_view text) {
  const auto sep = text.find("..");
  if (sep == std::string_view::npos) {
    throw UsageError("window must look like YYYY-MM-DD..YYYY-MM-DD, got '" + std::string(text) + "'");
  }
  auto start = parse_timestamp(text.substr(0, sep));
  auto last = parse_timestamp(text.substr(sep + 2));
  if (!start || !last) throw UsageError("unparseable window '" + std::string(text) + "'");
  Window window{*start, std::chrono::floor<days>(*last) + days{1}};
  if (!(window.start < window.end)) {
    throw UsageError("window start must precede its end: '" + std::string(text) + "'");
  }
  return window;
}

std::string format_timestamp(Timestamp t) {
  const auto day = std::chrono::floor<days>(t);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::string format_date(Timestamp t) { return format_timestamp(t).substr(0, 10); }

std::string format_window(const Window& window) {
  return format_date(window.start) + ".." + format_date(window.end - seconds{1});
}

}  // namespace misinfo
