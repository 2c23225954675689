#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "basinfo/date.hpp"

namespace basinfo {

enum class VariableCode { Precipitation, Discharge, Temperature, Evaporation };
enum class AggregationSemantic { Sum, Mean };

/// Variable semantics are fixed per code.
struct Variable {
  VariableCode code = VariableCode::Precipitation;

  std::string_view unit() const;
  AggregationSemantic semantic() const;
  std::string_view name() const;
  /// Physically admissible interval; used by outlier QC and fill clamping.
  double physical_min() const;
  double physical_max() const;

  static Variable parse(std::string_view name);  // throws InvalidArgument
  bool operator==(const Variable&) const = default;
};

enum class Flag : std::uint8_t { Raw = 0, Filled = 1, RemovedOutlier = 2, Suspect = 3 };
std::string_view to_string(Flag f);

enum class CorrectionMethod {
  Regression1,
  RegressionMulti,
  Idw,
  NormalRatio,
  TemporalLinear,
  External,
  OutlierRemoval,
};
std::string_view to_string(CorrectionMethod m);
CorrectionMethod parse_correction_method(std::string_view name);
bool is_fill_method(CorrectionMethod m);

struct CorrectionRecord {
  CorrectionMethod method = CorrectionMethod::External;
  std::map<std::string, std::string> parameters;
  std::vector<std::string> source_station_ids;
  std::string created_at;
  std::string created_by;

  bool operator==(const CorrectionRecord&) const = default;
};

/// A missing slot is std::nullopt; sentinel codes exist only in text files.
using Slot = std::optional<double>;

struct DailySeries {
  std::string id;
  std::string station_id;
  Variable variable;
  Date start;
  Date end;
  std::vector<Slot> values;
  std::vector<Flag> flags;
  int version = 1;
  std::optional<int> parent_version;
  std::optional<CorrectionRecord> correction;

  /// Builds a raw version-1 series starting at `start`, one slot per day.
  static DailySeries raw(std::string id, std::string station_id, Variable variable, Date start,
                         std::vector<Slot> values);

  std::size_t size() const { return values.size(); }
  DateRange range() const { return {start, end}; }
  Date date_at(std::size_t index) const { return start + static_cast<std::int64_t>(index); }
  bool missing(std::size_t index) const { return !values[index].has_value(); }

  bool operator==(const DailySeries&) const = default;
};

/// Slot index of `d`; throws OutOfRange outside [start, end].
std::size_t index_of(const DailySeries& s, Date d);

enum class ViolationKind {
  LengthMismatch,
  NonFiniteValue,
  FlagInconsistency,
  InvertedRange,
  VersionLineage,
};
std::string_view to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::optional<std::size_t> slot;
  std::string message;
};

/// Every violated DailySeries invariant; empty means the series is well formed.
std::vector<Violation> validate_series(const DailySeries& s);

enum class StationKind { Gauging, Climate, Rainfall };
std::string_view to_string(StationKind k);
StationKind parse_station_kind(std::string_view name);

struct Station {
  std::string id;
  std::string external_id;
  std::string name;
  StationKind kind = StationKind::Rainfall;
  double lat = 0;
  double lon = 0;
  double elevation = 0;
  int established = 0;
  std::string operator_name;
  std::optional<std::string> catchment_id;

  bool operator==(const Station&) const = default;
};

/// Throws InvalidArgument when coordinates or elevation are out of bounds.
void validate_station(const Station& s);

struct Gap {
  Date first;
  Date last;
  std::int64_t length() const { return last - first + 1; }
  bool operator==(const Gap&) const = default;
};

struct GapReport {
  std::string series_id;
  std::vector<Gap> gaps;
  std::int64_t total_missing = 0;
  double fraction_available = 1.0;
};

}  // namespace basinfo
