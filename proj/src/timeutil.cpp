#include "census/timeutil.hpp"

#include <chrono>
#include <cstdio>

namespace census {

namespace {

bool digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    char c = s[i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

}  // namespace

std::optional<EpochSeconds> parse_iso8601(std::string_view s) {
  // 0123456789012345678
  // YYYY-MM-DDTHH:MM:SS
  int y, mo, d, h, mi, se;
  if (s.size() < 20) return std::nullopt;
  if (!digits(s, 0, 4, y) || s[4] != '-' || !digits(s, 5, 2, mo) || s[7] != '-' ||
      !digits(s, 8, 2, d) || (s[10] != 'T' && s[10] != ' ') || !digits(s, 11, 2, h) ||
      s[13] != ':' || !digits(s, 14, 2, mi) || s[16] != ':' || !digits(s, 17, 2, se))
    return std::nullopt;
  if (h > 23 || mi > 59 || se > 59) return std::nullopt;

  int offset = 0;
  std::string_view tz = s.substr(19);
  if (tz == "Z" || tz == "z") {
    offset = 0;
  } else if (tz.size() == 6 && (tz[0] == '+' || tz[0] == '-') && tz[3] == ':') {
    int oh, om;
    if (!digits(tz, 1, 2, oh) || !digits(tz, 4, 2, om) || oh > 23 || om > 59)
      return std::nullopt;
    offset = (oh * 60 + om) * (tz[0] == '-' ? -1 : 1);
  } else {
    return std::nullopt;
  }

  using namespace std::chrono;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  EpochSeconds days = sys_days{ymd}.time_since_epoch().count();
  return days * 86400 + h * 3600 + mi * 60 + se - EpochSeconds{offset} * 60;
}

std::string format_iso8601(EpochSeconds t, int offset_minutes) {
  using namespace std::chrono;
  EpochSeconds local = t + EpochSeconds{offset_minutes} * 60;
  EpochSeconds days = local >= 0 ? local / 86400 : -((-local + 86399) / 86400);
  int sod = static_cast<int>(local - days * 86400);
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[40];
  if (offset_minutes == 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), sod / 3600, sod / 60 % 60, sod % 60);
  } else {
    int a = offset_minutes < 0 ? -offset_minutes : offset_minutes;
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d%c%02d:%02d", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), sod / 3600, sod / 60 % 60, sod % 60,
                  offset_minutes < 0 ? '-' : '+', a / 60, a % 60);
  }
  return buf;
}

std::string format_iso8601_utc(EpochSeconds t) { return format_iso8601(t, 0); }

std::optional<int> parse_clock(std::string_view s) {
  int h, m, sec = 0;
  if (!digits(s, 0, 2, h) || s.size() < 5 || s[2] != ':' || !digits(s, 3, 2, m)) return std::nullopt;
  if (s.size() == 8) {
    if (s[5] != ':' || !digits(s, 6, 2, sec)) return std::nullopt;
  } else if (s.size() != 5) {
    return std::nullopt;
  }
  if (h > 24 || m > 59 || sec > 59 || (h == 24 && (m || sec))) return std::nullopt;
  return h * 3600 + m * 60 + sec;
}

}  // namespace census
