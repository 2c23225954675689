#include "basinfo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "basinfo/error.hpp"

namespace basinfo {
namespace {

struct Pair {
  double x;
  double y;
};

// Two-pass centred covariance sums.
struct Moments {
  double mean_x = 0, mean_y = 0, sxx = 0, syy = 0, sxy = 0;
  std::int64_t n = 0;
};

Moments moments(const std::vector<Pair>& pairs) {
  Moments m;
  m.n = static_cast<std::int64_t>(pairs.size());
  if (pairs.empty()) return m;
  for (const auto& p : pairs) {
    m.mean_x += p.x;
    m.mean_y += p.y;
  }
  m.mean_x /= static_cast<double>(m.n);
  m.mean_y /= static_cast<double>(m.n);
  for (const auto& p : pairs) {
    const double dx = p.x - m.mean_x;
    const double dy = p.y - m.mean_y;
    m.sxx += dx * dx;
    m.syy += dy * dy;
    m.sxy += dx * dy;
  }
  return m;
}

Date first_of_month(Date d) { return Date::from_ymd(d.year(), d.month(), 1); }

Date add_months(Date first_of, int months) {
  int y = first_of.year();
  int m = static_cast<int>(first_of.month()) - 1 + months;
  y += m >= 0 ? m / 12 : (m - 11) / 12;
  m = ((m % 12) + 12) % 12;
  return Date::from_ymd(y, static_cast<unsigned>(m + 1), 1);
}

std::vector<std::int64_t> present_prefix(const DailySeries& s, DateRange r) {
  std::vector<std::int64_t> prefix(static_cast<std::size_t>(r.length()) + 1, 0);
  for (std::int64_t k = 0; k < r.length(); ++k) {
    const Date d = r.first + k;
    const bool present = s.range().contains(d) && !s.missing(static_cast<std::size_t>(d - s.start));
    prefix[static_cast<std::size_t>(k) + 1] = prefix[static_cast<std::size_t>(k)] + (present ? 1 : 0);
  }
  return prefix;
}

}  // namespace

BasicStats basic_stats(const DailySeries& s, std::optional<DateRange> window) {
  std::size_t lo = 0, hi = s.size();
  if (window) {
    if (window->first > window->last) throw Error(ErrorCode::InvalidRange, "window start after end");
    if (!s.range().contains(window->first) || !s.range().contains(window->last)) {
      throw Error(ErrorCode::OutOfRange, "window " + window->first.iso() + ".." + window->last.iso() +
                                             " outside series range");
    }
    lo = index_of(s, window->first);
    hi = index_of(s, window->last) + 1;
  }
  BasicStats st;
  double sum = 0;
  double mn = 0, mx = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    if (!s.values[i]) {
      ++st.missing;
      continue;
    }
    const double v = *s.values[i];
    if (st.present == 0) mn = mx = v;
    mn = std::min(mn, v);
    mx = std::max(mx, v);
    sum += v;
    ++st.present;
  }
  if (st.present > 0) {
    st.sum = sum;
    st.min = mn;
    st.max = mx;
    st.mean = sum / static_cast<double>(st.present);
  }
  return st;
}

Trend linear_trend(const DailySeries& s) {
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.values[i]) pairs.push_back({static_cast<double>(i), *s.values[i]});
  }
  if (pairs.size() < 2) {
    throw Error(ErrorCode::InsufficientData, "trend needs at least 2 observed days",
                std::to_string(pairs.size()));
  }
  const auto m = moments(pairs);
  Trend t;
  t.n = m.n;
  t.slope_per_day = m.sxy / m.sxx;
  t.slope_per_year = t.slope_per_day * 365.25;
  t.intercept = m.mean_y - t.slope_per_day * m.mean_x;
  return t;
}

Correlation correlate(const DailySeries& a, const DailySeries& b) {
  std::vector<Pair> pairs;
  if (auto joint = intersect(a.range(), b.range())) {
    for (Date d = joint->first; d <= joint->last; ++d) {
      const auto& va = a.values[static_cast<std::size_t>(d - a.start)];
      const auto& vb = b.values[static_cast<std::size_t>(d - b.start)];
      if (va && vb) pairs.push_back({*va, *vb});
    }
  }
  if (pairs.size() < 3) {
    throw Error(ErrorCode::InsufficientOverlap,
                "need at least 3 jointly observed days, found " + std::to_string(pairs.size()),
                std::to_string(pairs.size()));
  }
  const auto m = moments(pairs);
  if (m.sxx == 0 || m.syy == 0) {
    throw Error(ErrorCode::DegenerateInput, "a joint sample has zero variance");
  }
  const double r = m.sxy / std::sqrt(m.sxx * m.syy);
  return {std::clamp(r, -1.0, 1.0), m.n};
}

std::vector<Availability> availability(std::span<const DailySeries* const> series, DateRange period) {
  if (period.first > period.last) throw Error(ErrorCode::InvalidRange, "empty availability period");
  if (series.empty()) throw Error(ErrorCode::InvalidArgument, "availability needs at least one series");
  std::vector<Availability> out;
  for (const DailySeries* s : series) {
    Availability a;
    a.series_id = s->id;
    std::int64_t present = 0;
    std::optional<Date> gap_start;
    for (Date d = period.first; d <= period.last; ++d) {
      const bool observed = s->range().contains(d) && !s->missing(static_cast<std::size_t>(d - s->start));
      if (observed) {
        ++present;
        if (gap_start) {
          a.gaps.push_back({*gap_start, d - 1});
          gap_start.reset();
        }
      } else if (!gap_start) {
        gap_start = d;
      }
    }
    if (gap_start) a.gaps.push_back({*gap_start, period.last});
    a.fraction_available = static_cast<double>(present) / static_cast<double>(period.length());
    out.push_back(std::move(a));
  }
  return out;
}

std::optional<DateRange> overlap_period(std::span<const DailySeries* const> series,
                                        double min_fraction, Granularity granularity) {
  if (series.size() < 2) throw Error(ErrorCode::InvalidArgument, "overlap needs at least 2 series");
  if (!(min_fraction >= 0 && min_fraction <= 1)) {
    throw Error(ErrorCode::InvalidArgument, "min fraction must lie in [0,1]");
  }
  std::optional<DateRange> common = series.front()->range();
  for (const auto* s : series) {
    if (common) common = intersect(*common, s->range());
  }
  if (!common) return std::nullopt;

  std::vector<std::vector<std::int64_t>> prefix;
  prefix.reserve(series.size());
  for (const auto* s : series) prefix.push_back(present_prefix(*s, *common));

  auto feasible = [&](std::int64_t lo, std::int64_t hi) {  // offsets into common, inclusive
    const auto len = static_cast<double>(hi - lo + 1);
    for (const auto& p : prefix) {
      const auto present = static_cast<double>(p[static_cast<std::size_t>(hi) + 1] - p[static_cast<std::size_t>(lo)]);
      if (present / len < min_fraction) return false;
    }
    return true;
  };

  const std::int64_t n = common->length();
  if (granularity == Granularity::Day) {
    for (std::int64_t len = n; len >= 1; --len) {
      for (std::int64_t lo = 0; lo + len <= n; ++lo) {
        if (feasible(lo, lo + len - 1)) return DateRange{common->first + lo, common->first + lo + len - 1};
      }
    }
    return std::nullopt;
  }

  // Whole months inside the common range.
  std::vector<DateRange> months;
  Date m = first_of_month(common->first);
  if (m < common->first) m = add_months(m, 1);
  for (; ; m = add_months(m, 1)) {
    const Date last = add_months(m, 1) - 1;
    if (last > common->last) break;
    months.push_back({m, last});
  }
  std::optional<DateRange> best;
  for (std::size_t a = 0; a < months.size(); ++a) {
    for (std::size_t b = months.size(); b-- > a;) {
      DateRange cand{months[a].first, months[b].last};
      if (best && cand.length() <= best->length()) break;
      if (feasible(cand.first - common->first, cand.last - common->first)) {
        best = cand;
        break;
      }
    }
  }
  return best;
}

void AggregationPolicy::validate() const {
  if (!(max_missing_fraction >= 0 && max_missing_fraction <= 1)) {
    throw Error(ErrorCode::InvalidArgument, "max missing fraction must lie in [0,1]");
  }
  if (hydro_start_month < 1 || hydro_start_month > 12) {
    throw Error(ErrorCode::InvalidArgument, "hydrological year start month must be 1..12");
  }
}

std::vector<AggregateRow> aggregate(const DailySeries& s, const AggregationPolicy& p) {
  p.validate();
  // First period containing s.start, and the period step in months.
  Date period_start;
  int step_months = 1;
  switch (p.step) {
    case AggregationStep::Monthly:
      period_start = first_of_month(s.start);
      break;
    case AggregationStep::Yearly:
      period_start = Date::from_ymd(s.start.year(), 1, 1);
      step_months = 12;
      break;
    case AggregationStep::HydroYear: {
      int y = s.start.year();
      if (s.start.month() < p.hydro_start_month) --y;
      period_start = Date::from_ymd(y, p.hydro_start_month, 1);
      step_months = 12;
      break;
    }
  }
  const bool sum_semantic = s.variable.semantic() == AggregationSemantic::Sum;
  std::vector<AggregateRow> rows;
  char label[32];
  for (Date first = period_start; first <= s.end; first = add_months(first, step_months)) {
    const Date last = add_months(first, step_months) - 1;
    std::int64_t missing = 0, present = 0;
    double acc = 0;
    for (Date d = first; d <= last; ++d) {
      if (!s.range().contains(d) || s.missing(static_cast<std::size_t>(d - s.start))) {
        ++missing;
      } else {
        acc += *s.values[static_cast<std::size_t>(d - s.start)];
        ++present;
      }
    }
    AggregateRow row;
    row.first = first;
    row.last = last;
    row.missing_fraction = static_cast<double>(missing) / static_cast<double>(last - first + 1);
    switch (p.step) {
      case AggregationStep::Monthly:
        std::snprintf(label, sizeof label, "%04d-%02u", first.year(), first.month());
        break;
      case AggregationStep::Yearly:
        std::snprintf(label, sizeof label, "%04d", first.year());
        break;
      case AggregationStep::HydroYear:
        std::snprintf(label, sizeof label, "HY%04d", first.year());
        break;
    }
    row.label = label;
    bool suppress = false;
    switch (p.gap_policy) {
      case GapPolicy::Strict:
      case GapPolicy::UseFilled: suppress = missing > 0; break;
      case GapPolicy::Tolerant: suppress = row.missing_fraction > p.max_missing_fraction; break;
    }
    if (!suppress && present > 0) {
      row.value = sum_semantic ? acc : acc / static_cast<double>(present);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

const DailySeries& latest_filled_version(std::span<const DailySeries> versions) {
  // A version carries a fill if it or any ancestor was produced by a fill method.
  const DailySeries* found = nullptr;
  bool filled_lineage = false;
  for (const auto& v : versions) {
    if (v.correction && is_fill_method(v.correction->method)) filled_lineage = true;
    if (filled_lineage) found = &v;
  }
  if (!found) throw Error(ErrorCode::NoFilledVersion, "series has no filled version");
  return *found;
}

CoverageReport coverage_report(std::string catchment_id, std::span<const Station> stations,
                               std::span<const DailySeries* const> series, Date today) {
  CoverageReport report;
  report.catchment_id = std::move(catchment_id);
  report.reference_date = today;
  const Date window_start = today - 364;
  std::map<std::string, const Station*> by_id;
  for (const auto& st : stations) by_id[st.id] = &st;

  for (auto code : {VariableCode::Precipitation, VariableCode::Discharge, VariableCode::Temperature,
                    VariableCode::Evaporation}) {
    VariableCoverage vc;
    vc.variable = Variable{code};
    std::map<std::string, StationSpan> spans;
    for (const auto* s : series) {
      if (s->variable.code != code) continue;
      auto it = by_id.find(s->station_id);
      if (it == by_id.end()) continue;
      auto& span = spans[s->station_id];
      span.station_id = s->station_id;
      span.kind = it->second->kind;
      for (std::size_t i = 0; i < s->size(); ++i) {
        if (s->missing(i)) continue;
        const Date d = s->date_at(i);
        if (!span.first_observation || d < *span.first_observation) span.first_observation = d;
        if (!span.last_observation || d > *span.last_observation) span.last_observation = d;
        if (d >= window_start && d <= today) span.active = true;
      }
    }
    for (auto& [id, span] : spans) {
      if (span.active) {
        ++vc.active_station_count;
        auto& list = report.active_stations_by_kind[span.kind];
        if (std::find(list.begin(), list.end(), id) == list.end()) list.push_back(id);
      } else {
        ++vc.inactive_station_count;
      }
      if (span.first_observation &&
          (!vc.earliest_observation || *span.first_observation < *vc.earliest_observation)) {
        vc.earliest_observation = span.first_observation;
      }
      if (span.last_observation &&
          (!vc.latest_observation || *span.last_observation > *vc.latest_observation)) {
        vc.latest_observation = span.last_observation;
      }
      vc.stations.push_back(span);
    }
    report.variables.push_back(std::move(vc));
  }
  for (auto& [kind, list] : report.active_stations_by_kind) std::sort(list.begin(), list.end());
  return report;
}

}  // namespace basinfo
