#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace basinfo {

enum class ErrorCode {
  InvalidRange,
  OutOfRange,
  InvalidArgument,
  EmptyInput,
  ParseError,
  DuplicateDate,
  UnknownStation,
  UnknownSeries,
  UnknownCatchment,
  UnknownAsset,
  NotFound,
  Forbidden,
  Unauthorized,
  AuthFailed,
  InsufficientData,
  InsufficientOverlap,
  DegenerateInput,
  NoFilledVersion,
  NoOp,
  InsufficientPairs,
  WeakCorrelation,
  VariableMismatch,
  NoNeighbors,
  NonPrecipitation,
  ZeroMean,
  OverwriteAttempt,
  StalePreview,
  StaleWrite,
  BadMagic,
  UnsupportedShapeType,
  TruncatedRecord,
  TooLarge,
  Conflict,
  Internal,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the whole library. `detail` carries the
// machine-readable payload (line number, offending date, threshold...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string detail = {})
      : std::runtime_error(std::move(message)), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace basinfo
