#include "iotmesh/datetime.hpp"

#include <cstdio>
#include <ctime>

namespace iotmesh {

namespace {

std::chrono::year_month_day to_ymd(const DateTime& dt) {
  return std::chrono::year_month_day{std::chrono::year{dt.year},
                                     std::chrono::month{static_cast<unsigned>(dt.month)},
                                     std::chrono::day{static_cast<unsigned>(dt.day)}};
}

DateTime from_days(std::chrono::sys_days sd, int hour, int minute) {
  std::chrono::year_month_day ymd{sd};
  DateTime out;
  out.year = static_cast<int>(ymd.year());
  out.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
  out.day = static_cast<int>(static_cast<unsigned>(ymd.day()));
  out.hour = hour;
  out.minute = minute;
  return out;
}

}  // namespace

bool DateTime::valid() const {
  if (hour < 0 || hour > 23 || minute < 0 || minute > 59) return false;
  if (month < 1 || month > 12 || day < 1 || day > 31) return false;
  return to_ymd(*this).ok();
}

int DateTime::weekday() const {
  std::chrono::weekday wd{std::chrono::sys_days{to_ymd(*this)}};
  return static_cast<int>(wd.c_encoding());
}

std::int64_t DateTime::minutes_since_epoch() const {
  auto days = std::chrono::sys_days{to_ymd(*this)}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 24 * 60 + hour * 60 + minute;
}

DateTime DateTime::plus_days(int days) const {
  auto sd = std::chrono::sys_days{to_ymd(*this)} + std::chrono::days{days};
  return from_days(sd, hour, minute);
}

DateTime DateTime::plus_minutes(std::int64_t minutes) const {
  std::int64_t total = minutes_since_epoch() + minutes;
  std::int64_t day_count = total / (24 * 60);
  std::int64_t rem = total % (24 * 60);
  if (rem < 0) {
    rem += 24 * 60;
    day_count -= 1;
  }
  auto sd = std::chrono::sys_days{} + std::chrono::days{day_count};
  return from_days(sd, static_cast<int>(rem / 60), static_cast<int>(rem % 60));
}

std::string DateTime::iso() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d", year, month, day, hour, minute);
  return buf;
}

std::optional<DateTime> DateTime::from_iso(const std::string& text) {
  DateTime dt;
  char sep = 0;
  int seconds = 0;
  int n = std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &dt.year, &dt.month, &dt.day, &sep,
                      &dt.hour, &dt.minute, &seconds);
  if (n < 6 || (sep != 'T' && sep != 't' && sep != ' ')) return std::nullopt;
  if (!dt.valid()) return std::nullopt;
  return dt;
}

DateTime wall_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  localtime_r(&t, &tm);
  return DateTime{tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min};
}

std::string iso8601_utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

}  // namespace iotmesh
