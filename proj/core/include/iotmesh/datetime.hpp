#ifndef IOTMESH_DATETIME_HPP
#define IOTMESH_DATETIME_HPP

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace iotmesh {

// Minute-precision local datetime. Calendar math goes through
// std::chrono::sys_days so month/year boundaries are handled correctly.
struct DateTime {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
  int hour = 0;   // 0..23
  int minute = 0; // 0..59

  bool valid() const;
  // 0 = Sunday .. 6 = Saturday.
  int weekday() const;
  std::int64_t minutes_since_epoch() const;
  DateTime plus_days(int days) const;
  DateTime plus_minutes(std::int64_t minutes) const;

  // "YYYY-MM-DDTHH:MM"
  std::string iso() const;
  static std::optional<DateTime> from_iso(const std::string& text);

  friend bool operator==(const DateTime&, const DateTime&) = default;
  std::strong_ordering operator<=>(const DateTime& other) const {
    return minutes_since_epoch() <=> other.minutes_since_epoch();
  }
};

// Current wall-clock datetime (local time).
DateTime wall_now();

// "YYYY-MM-DDTHH:MM:SSZ", UTC; used for log lines and event printing.
std::string iso8601_utc_now();

}  // namespace iotmesh

#endif
