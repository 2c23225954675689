#include "basinfo/date.hpp"

#include <charconv>
#include <cstdio>

#include "basinfo/error.hpp"

namespace basinfo {
namespace {

// Howard Hinnant's days_from_civil / civil_from_days.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
  std::int64_t year;
  unsigned month;
  unsigned day;
};

Civil civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {y + (m <= 2), m, d};
}

}  // namespace

bool is_leap_year(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

unsigned days_in_month(int year, unsigned month) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month < 1 || month > 12) return 0;
  if (month == 2 && is_leap_year(year)) return 29;
  return kDays[month - 1];
}

std::optional<Date> Date::try_from_ymd(int year, unsigned month, unsigned day) {
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month)) return std::nullopt;
  return Date(days_from_civil(year, month, day));
}

Date Date::from_ymd(int year, unsigned month, unsigned day) {
  auto d = try_from_ymd(year, month, day);
  if (!d) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
    throw Error(ErrorCode::InvalidArgument, std::string("invalid calendar date ") + buf, buf);
  }
  return *d;
}

Date Date::parse_iso(std::string_view text) {
  auto fail = [&] {
    return Error(ErrorCode::InvalidArgument, "expected YYYY-MM-DD, got '" + std::string(text) + "'",
                 std::string(text));
  };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw fail();
  int y = 0;
  unsigned m = 0, d = 0;
  auto num = [&](std::size_t pos, std::size_t len, auto& out) {
    auto [p, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    return ec == std::errc() && p == text.data() + pos + len;
  };
  if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) throw fail();
  auto date = try_from_ymd(y, m, d);
  if (!date) throw fail();
  return *date;
}

int Date::year() const { return static_cast<int>(civil_from_days(days_).year); }
unsigned Date::month() const { return civil_from_days(days_).month; }
unsigned Date::day() const { return civil_from_days(days_).day; }

std::string Date::iso() const {
  const auto c = civil_from_days(days_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u", static_cast<long long>(c.year), c.month, c.day);
  return buf;
}

std::optional<DateRange> intersect(const DateRange& a, const DateRange& b) {
  DateRange r{std::max(a.first, b.first), std::min(a.last, b.last)};
  if (r.first > r.last) return std::nullopt;
  return r;
}

std::vector<Date> make_daily_grid(Date start, Date end) {
  if (start > end) {
    throw Error(ErrorCode::InvalidRange, "start " + start.iso() + " is after end " + end.iso());
  }
  std::vector<Date> out;
  out.reserve(static_cast<std::size_t>(end - start + 1));
  for (Date d = start; d <= end; ++d) out.push_back(d);
  return out;
}

}  // namespace basinfo
