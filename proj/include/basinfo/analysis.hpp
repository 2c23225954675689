#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "basinfo/model.hpp"

namespace basinfo {

struct BasicStats {
  std::optional<double> sum;
  std::optional<double> max;
  std::optional<double> mean;
  std::optional<double> min;
  std::int64_t present = 0;
  std::int64_t missing = 0;
};

/// Statistics over the non-missing slots of `s` (optionally restricted to
/// `window`, which must lie inside the series range).
BasicStats basic_stats(const DailySeries& s, std::optional<DateRange> window = std::nullopt);

struct Trend {
  double slope_per_day = 0;
  double slope_per_year = 0;  // slope_per_day * 365.25
  double intercept = 0;       // value at the series start date
  std::int64_t n = 0;
};

/// OLS of value against days since series start.
Trend linear_trend(const DailySeries& s);

struct Correlation {
  double r = 0;
  std::int64_t n = 0;
};

/// Pearson r over the days where both series are observed.
Correlation correlate(const DailySeries& a, const DailySeries& b);

struct Availability {
  std::string series_id;
  double fraction_available = 0;
  std::vector<Gap> gaps;  // clipped to the period
};

std::vector<Availability> availability(std::span<const DailySeries* const> series, DateRange period);

enum class Granularity { Day, Month };

/// Longest range inside the intersection of all series spans where every
/// series has availability >= min_fraction. Ties go to the earliest start.
/// Month granularity restricts candidates to whole calendar months.
std::optional<DateRange> overlap_period(std::span<const DailySeries* const> series,
                                        double min_fraction,
                                        Granularity granularity = Granularity::Day);

enum class AggregationStep { Monthly, Yearly, HydroYear };
enum class GapPolicy { Strict, Tolerant, UseFilled };

struct AggregationPolicy {
  AggregationStep step = AggregationStep::Monthly;
  GapPolicy gap_policy = GapPolicy::Strict;
  double max_missing_fraction = 0;  // Tolerant only
  unsigned hydro_start_month = 4;

  void validate() const;
};

struct AggregateRow {
  std::string label;
  Date first;
  Date last;
  Slot value;
  double missing_fraction = 0;
};

/// One row per period intersecting the series range. Days of a period that
/// fall outside the series count as missing. UseFilled aggregates `s` with
/// the strict rule; the caller supplies the filled version.
std::vector<AggregateRow> aggregate(const DailySeries& s, const AggregationPolicy& p);

/// Latest version whose lineage contains a fill method. `versions` is ordered
/// by version number. Throws NoFilledVersion.
const DailySeries& latest_filled_version(std::span<const DailySeries> versions);

struct StationSpan {
  std::string station_id;
  StationKind kind = StationKind::Rainfall;
  std::optional<Date> first_observation;
  std::optional<Date> last_observation;
  bool active = false;
};

struct VariableCoverage {
  Variable variable;
  int active_station_count = 0;
  int inactive_station_count = 0;
  std::optional<Date> earliest_observation;
  std::optional<Date> latest_observation;
  std::vector<StationSpan> stations;
};

struct CoverageReport {
  std::string catchment_id;
  Date reference_date;
  std::vector<VariableCoverage> variables;  // one entry per variable code
  /// Stations active for at least one variable, by station kind.
  std::map<StationKind, std::vector<std::string>> active_stations_by_kind;
};

/// A station is active for a variable iff it has an observation within the
/// trailing 365 days ending at `today` (inclusive).
CoverageReport coverage_report(std::string catchment_id, std::span<const Station> stations,
                               std::span<const DailySeries* const> series, Date today);

}  // namespace basinfo
