#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace basinfo {

/// Proleptic Gregorian civil date, stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;

  static Date from_ymd(int year, unsigned month, unsigned day);  // throws InvalidArgument
  static std::optional<Date> try_from_ymd(int year, unsigned month, unsigned day);
  static constexpr Date from_serial(std::int64_t days) { return Date(days); }
  /// Parses strict `YYYY-MM-DD`.
  static Date parse_iso(std::string_view text);

  constexpr std::int64_t serial() const { return days_; }
  int year() const;
  unsigned month() const;
  unsigned day() const;
  std::string iso() const;

  constexpr Date operator+(std::int64_t n) const { return Date(days_ + n); }
  constexpr Date operator-(std::int64_t n) const { return Date(days_ - n); }
  constexpr std::int64_t operator-(Date other) const { return days_ - other.days_; }
  Date& operator++() {
    ++days_;
    return *this;
  }

  constexpr auto operator<=>(const Date&) const = default;

 private:
  constexpr explicit Date(std::int64_t days) : days_(days) {}
  std::int64_t days_ = 0;
};

bool is_leap_year(int year);
unsigned days_in_month(int year, unsigned month);

/// Inclusive civil date range.
struct DateRange {
  Date first;
  Date last;

  std::int64_t length() const { return last - first + 1; }
  bool contains(Date d) const { return first <= d && d <= last; }
  bool operator==(const DateRange&) const = default;
};

std::optional<DateRange> intersect(const DateRange& a, const DateRange& b);

/// Every calendar day in [start, end], ascending. Throws InvalidRange if start > end.
std::vector<Date> make_daily_grid(Date start, Date end);

}  // namespace basinfo
