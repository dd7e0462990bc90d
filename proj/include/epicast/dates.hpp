#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace epicast {

// Calendar day stored as a count of days since 1970-01-01. Day-of-week
// convention throughout the project: Monday = 0 .. Sunday = 6.
struct Date {
  std::int64_t days = 0;

  static std::optional<Date> parse(std::string_view iso);

  std::string to_iso() const;

  int weekday_mon0() const {
    // 1970-01-01 was a Thursday (index 3 under Monday=0).
    std::int64_t w = (days + 3) % 7;
    if (w < 0) w += 7;
    return static_cast<int>(w);
  }

  Date operator+(std::int64_t n) const { return Date{days + n}; }
  Date operator-(std::int64_t n) const { return Date{days - n}; }
  std::int64_t operator-(Date other) const { return days - other.days; }
  auto operator<=>(const Date&) const = default;
};

inline std::optional<Date> Date::parse(std::string_view iso) {
  // Strict YYYY-MM-DD.
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
  auto digits = [](std::string_view s) -> std::optional<int> {
    int v = 0;
    for (char c : s) {
      if (c < '0' || c > '9') return std::nullopt;
      v = v * 10 + (c - '0');
    }
    return v;
  };
  auto y = digits(iso.substr(0, 4));
  auto m = digits(iso.substr(5, 2));
  auto d = digits(iso.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y},
                                        std::chrono::month{static_cast<unsigned>(*m)},
                                        std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{std::chrono::sys_days(ymd).time_since_epoch().count()};
}

inline std::string Date::to_iso() const {
  const std::chrono::sys_days sd{std::chrono::days{days}};
  const std::chrono::year_month_day ymd{sd};
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return std::string(buf);
}

}  // namespace epicast
