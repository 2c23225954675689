#include "basinfo/model.hpp"

#include <cmath>
#include <limits>

#include "basinfo/error.hpp"

namespace basinfo {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateDate: return "DuplicateDate";
    case ErrorCode::UnknownStation: return "UnknownStation";
    case ErrorCode::UnknownSeries: return "UnknownSeries";
    case ErrorCode::UnknownCatchment: return "UnknownCatchment";
    case ErrorCode::UnknownAsset: return "UnknownAsset";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Forbidden: return "Forbidden";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::AuthFailed: return "AuthFailed";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NoFilledVersion: return "NoFilledVersion";
    case ErrorCode::NoOp: return "NoOp";
    case ErrorCode::InsufficientPairs: return "InsufficientPairs";
    case ErrorCode::WeakCorrelation: return "WeakCorrelation";
    case ErrorCode::VariableMismatch: return "VariableMismatch";
    case ErrorCode::NoNeighbors: return "NoNeighbors";
    case ErrorCode::NonPrecipitation: return "NonPrecipitation";
    case ErrorCode::ZeroMean: return "ZeroMean";
    case ErrorCode::OverwriteAttempt: return "OverwriteAttempt";
    case ErrorCode::StalePreview: return "StalePreview";
    case ErrorCode::StaleWrite: return "StaleWrite";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedShapeType: return "UnsupportedShapeType";
    case ErrorCode::TruncatedRecord: return "TruncatedRecord";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::Internal: return "Internal";
  }
  return "Internal";
}

std::string_view Variable::unit() const {
  switch (code) {
    case VariableCode::Precipitation: return "mm/day";
    case VariableCode::Discharge: return "m3/s";
    case VariableCode::Temperature: return "degC";
    case VariableCode::Evaporation: return "mm/day";
  }
  return "";
}

AggregationSemantic Variable::semantic() const {
  switch (code) {
    case VariableCode::Precipitation:
    case VariableCode::Evaporation: return AggregationSemantic::Sum;
    case VariableCode::Discharge:
    case VariableCode::Temperature: return AggregationSemantic::Mean;
  }
  return AggregationSemantic::Mean;
}

std::string_view Variable::name() const {
  switch (code) {
    case VariableCode::Precipitation: return "precipitation";
    case VariableCode::Discharge: return "discharge";
    case VariableCode::Temperature: return "temperature";
    case VariableCode::Evaporation: return "evaporation";
  }
  return "";
}

double Variable::physical_min() const { return code == VariableCode::Temperature ? -40.0 : 0.0; }

double Variable::physical_max() const {
  return code == VariableCode::Temperature ? 60.0 : std::numeric_limits<double>::infinity();
}

Variable Variable::parse(std::string_view name) {
  for (auto c : {VariableCode::Precipitation, VariableCode::Discharge, VariableCode::Temperature,
                 VariableCode::Evaporation}) {
    if (Variable{c}.name() == name) return Variable{c};
  }
  throw Error(ErrorCode::InvalidArgument, "unknown variable '" + std::string(name) + "'",
              std::string(name));
}

std::string_view to_string(Flag f) {
  switch (f) {
    case Flag::Raw: return "raw";
    case Flag::Filled: return "filled";
    case Flag::RemovedOutlier: return "removed-outlier";
    case Flag::Suspect: return "suspect";
  }
  return "raw";
}

std::string_view to_string(CorrectionMethod m) {
  switch (m) {
    case CorrectionMethod::Regression1: return "regression-1";
    case CorrectionMethod::RegressionMulti: return "regression-multi";
    case CorrectionMethod::Idw: return "idw";
    case CorrectionMethod::NormalRatio: return "normal-ratio";
    case CorrectionMethod::TemporalLinear: return "temporal-linear";
    case CorrectionMethod::External: return "external";
    case CorrectionMethod::OutlierRemoval: return "outlier-removal";
  }
  return "external";
}

CorrectionMethod parse_correction_method(std::string_view name) {
  for (auto m : {CorrectionMethod::Regression1, CorrectionMethod::RegressionMulti,
                 CorrectionMethod::Idw, CorrectionMethod::NormalRatio,
                 CorrectionMethod::TemporalLinear, CorrectionMethod::External,
                 CorrectionMethod::OutlierRemoval}) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown correction method '" + std::string(name) + "'",
              std::string(name));
}

bool is_fill_method(CorrectionMethod m) { return m != CorrectionMethod::OutlierRemoval; }

DailySeries DailySeries::raw(std::string id, std::string station_id, Variable variable,
                             Date start, std::vector<Slot> values) {
  DailySeries s;
  s.id = std::move(id);
  s.station_id = std::move(station_id);
  s.variable = variable;
  s.start = start;
  s.end = start + static_cast<std::int64_t>(values.size()) - 1;
  s.flags.assign(values.size(), Flag::Raw);
  s.values = std::move(values);
  return s;
}

std::size_t index_of(const DailySeries& s, Date d) {
  if (d < s.start || d > s.end) {
    throw Error(ErrorCode::OutOfRange,
                d.iso() + " outside series range " + s.start.iso() + ".." + s.end.iso(), d.iso());
  }
  return static_cast<std::size_t>(d - s.start);
}

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::LengthMismatch: return "length-mismatch";
    case ViolationKind::NonFiniteValue: return "non-finite-value";
    case ViolationKind::FlagInconsistency: return "flag-inconsistency";
    case ViolationKind::InvertedRange: return "inverted-range";
    case ViolationKind::VersionLineage: return "version-lineage";
  }
  return "";
}

std::vector<Violation> validate_series(const DailySeries& s) {
  std::vector<Violation> out;
  if (s.start > s.end) {
    out.push_back({ViolationKind::InvertedRange, std::nullopt, "start after end"});
  } else {
    const auto expected = static_cast<std::size_t>(s.end - s.start + 1);
    if (s.values.size() != expected) {
      out.push_back({ViolationKind::LengthMismatch, std::nullopt,
                     "expected " + std::to_string(expected) + " values, found " +
                         std::to_string(s.values.size())});
    }
  }
  if (s.flags.size() != s.values.size()) {
    out.push_back({ViolationKind::LengthMismatch, std::nullopt,
                   "flags length " + std::to_string(s.flags.size()) + " differs from values length " +
                       std::to_string(s.values.size())});
  }
  const std::size_t n = std::min(s.values.size(), s.flags.size());
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (s.values[i] && !std::isfinite(*s.values[i])) {
      out.push_back({ViolationKind::NonFiniteValue, i, "non-finite value"});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (s.flags[i] == Flag::Filled && !s.values[i]) {
      out.push_back({ViolationKind::FlagInconsistency, i, "filled slot is missing"});
    } else if (s.flags[i] == Flag::RemovedOutlier && s.values[i]) {
      out.push_back({ViolationKind::FlagInconsistency, i, "removed-outlier slot holds a value"});
    }
  }
  if (s.version < 1) {
    out.push_back({ViolationKind::VersionLineage, std::nullopt, "version must be >= 1"});
  } else if (s.version == 1) {
    if (s.parent_version || s.correction) {
      out.push_back({ViolationKind::VersionLineage, std::nullopt,
                     "version 1 carries a parent or correction record"});
    }
  } else if (!s.parent_version || !s.correction) {
    out.push_back({ViolationKind::VersionLineage, std::nullopt,
                   "corrected version lacks parent or correction record"});
  } else if (s.correction->parameters.empty() && s.correction->method != CorrectionMethod::External) {
    out.push_back({ViolationKind::VersionLineage, std::nullopt,
                   "correction record has no parameters"});
  }
  return out;
}

std::string_view to_string(StationKind k) {
  switch (k) {
    case StationKind::Gauging: return "gauging";
    case StationKind::Climate: return "climate";
    case StationKind::Rainfall: return "rainfall";
  }
  return "";
}

StationKind parse_station_kind(std::string_view name) {
  for (auto k : {StationKind::Gauging, StationKind::Climate, StationKind::Rainfall}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown station kind '" + std::string(name) + "'",
              std::string(name));
}

void validate_station(const Station& s) {
  if (s.id.empty()) throw Error(ErrorCode::InvalidArgument, "station id is empty");
  if (!(s.lat >= -90 && s.lat <= 90) || !(s.lon >= -180 && s.lon <= 180)) {
    throw Error(ErrorCode::InvalidArgument, "station " + s.id + " has coordinates out of range");
  }
  if (!(s.elevation >= -500 && s.elevation <= 9000)) {
    throw Error(ErrorCode::InvalidArgument, "station " + s.id + " has elevation out of range");
  }
}

}  // namespace basinfo
