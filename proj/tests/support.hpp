// Shared helpers for the unit and acceptance suites: temporary directories,
// random series, and brute-force reference implementations.
#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "basinfo/model.hpp"

namespace support {

using basinfo::Date;
using basinfo::DailySeries;
using basinfo::Slot;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "basinfo-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Date ymd(int y, unsigned m, unsigned d) { return Date::from_ymd(y, m, d); }

/// Random series with values rounded to `decimals` and missing runs.
inline DailySeries random_series(std::mt19937_64& rng, std::string id, basinfo::Variable v, Date start,
                                 int days, double missing_rate, int decimals = 2, double lo = 0, double hi = 100) {
  std::uniform_real_distribution<double> val(lo, hi);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Slot> values;
  const double scale = std::pow(10.0, decimals);
  bool in_gap = false;
  for (int i = 0; i < days; ++i) {
    // Runs: entering a gap is rare, staying in one is likely.
    in_gap = in_gap ? u(rng) < 0.7 : u(rng) < missing_rate * 0.3;
    if (in_gap) {
      values.push_back(std::nullopt);
    } else {
      values.push_back(std::round(val(rng) * scale) / scale);
    }
  }
  return DailySeries::raw(std::move(id), "st-x", v, start, std::move(values));
}

inline std::map<std::int64_t, double> observed(const DailySeries& s) {
  std::map<std::int64_t, double> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.values[i]) out[s.date_at(i).serial()] = *s.values[i];
  }
  return out;
}

/// Pearson r by the textbook two-pass formula in long double over date-joined pairs.
inline std::optional<double> pearson(const DailySeries& a, const DailySeries& b, std::size_t* n_out = nullptr) {
  const auto oa = observed(a), ob = observed(b);
  std::vector<std::pair<long double, long double>> pairs;
  for (const auto& [d, x] : oa) {
    auto it = ob.find(d);
    if (it != ob.end()) pairs.emplace_back(x, it->second);
  }
  if (n_out) *n_out = pairs.size();
  if (pairs.size() < 3) return std::nullopt;
  long double mx = 0, my = 0;
  for (auto [x, y] : pairs) mx += x, my += y;
  mx /= pairs.size();
  my /= pairs.size();
  long double sxy = 0, sxx = 0, syy = 0;
  for (auto [x, y] : pairs) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0 || syy == 0) return std::nullopt;
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

/// OLS slope/intercept (at series start) via normal equations in long double.
inline std::optional<std::pair<double, double>> ols(const DailySeries& s) {
  long double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s.values[i]) continue;
    const long double x = static_cast<long double>(i), y = *s.values[i];
    n += 1, sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const long double det = n * sxx - sx * sx;
  if (n < 2 || det == 0) return std::nullopt;
  const long double slope = (n * sxy - sx * sy) / det;
  const long double intercept = (sy - slope * sx) / n;
  return std::pair<double, double>{static_cast<double>(slope), static_cast<double>(intercept)};
}

/// Day-by-day scan of the period.
inline double availability_fraction(const DailySeries& s, Date first, Date last) {
  std::int64_t present = 0, total = 0;
  for (Date d = first; d <= last; ++d) {
    ++total;
    if (d >= s.start && d <= s.end && s.values[static_cast<std::size_t>(d - s.start)]) ++present;
  }
  return static_cast<double>(present) / static_cast<double>(total);
}

/// Exhaustive month-granularity search: every [month a start, month b end] inside
/// the common span, feasible iff present * den >= num * len for every series.
inline std::optional<basinfo::DateRange> overlap_months(const std::vector<const DailySeries*>& series,
                                                         std::int64_t num, std::int64_t den) {
  Date lo = series[0]->start, hi = series[0]->end;
  for (const auto* s : series) lo = std::max(lo, s->start), hi = std::min(hi, s->end);
  if (lo > hi) return std::nullopt;
  std::vector<Date> month_starts;
  for (Date d = lo; d <= hi; ++d) {
    if (d.day() == 1) month_starts.push_back(d);
  }
  auto month_end = [](Date first) {
    return Date::from_ymd(first.year(), first.month(), basinfo::days_in_month(first.year(), first.month()));
  };
  std::vector<std::vector<std::int64_t>> prefix;
  for (const auto* s : series) {
    std::vector<std::int64_t> p{0};
    for (Date d = lo; d <= hi; ++d) {
      p.push_back(p.back() + (s->values[static_cast<std::size_t>(d - s->start)] ? 1 : 0));
    }
    prefix.push_back(std::move(p));
  }
  std::optional<basinfo::DateRange> best;
  for (std::size_t a = 0; a < month_starts.size(); ++a) {
    for (std::size_t b = a; b < month_starts.size(); ++b) {
      const Date first = month_starts[a], last = month_end(month_starts[b]);
      if (last > hi) continue;
      const std::int64_t len = last - first + 1;
      bool ok = true;
      for (const auto& p : prefix) {
        const std::int64_t present = p[static_cast<std::size_t>(last - lo) + 1] - p[static_cast<std::size_t>(first - lo)];
        if (present * den < num * len) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      if (!best || len > best->last - best->first + 1 ||
          (len == best->last - best->first + 1 && first < best->first)) {
        best = basinfo::DateRange{first, last};
      }
    }
  }
  return best;
}

inline bool xml_well_formed(const std::string& xml, std::string* error = nullptr) {
  try {
    std::istringstream in(xml);
    boost::property_tree::ptree tree;
    boost::property_tree::read_xml(in, tree);
    return !tree.empty();
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return false;
  }
}

/// dc:identifier of every csw:Record in a GetRecords response, in document order,
/// plus the numberOfRecordsMatched attribute.
struct SearchResults {
  std::size_t matched = 0;
  std::size_t next = 0;
  std::vector<std::string> ids;
};

inline SearchResults parse_search_results(const std::string& xml) {
  std::istringstream in(xml);
  boost::property_tree::ptree tree;
  boost::property_tree::read_xml(in, tree);
  const auto& results = tree.get_child("csw:GetRecordsResponse.csw:SearchResults");
  SearchResults out;
  out.matched = results.get<std::size_t>("<xmlattr>.numberOfRecordsMatched");
  out.next = results.get<std::size_t>("<xmlattr>.nextRecord");
  for (const auto& [name, child] : results) {
    if (name == "csw:Record") out.ids.push_back(child.get<std::string>("dc:identifier"));
  }
  return out;
}

inline bool close(double a, double b, double rel = 1e-9) {
  return std::fabs(a - b) <= rel * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace support
