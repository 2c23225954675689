#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "basinfo/ingest.hpp"
#include "basinfo/model.hpp"

namespace basinfo {

struct OutlierRule {
  double physical_min = 0;
  double physical_max = 0;
  double zscore_threshold = 3.5;

  static OutlierRule for_variable(Variable v, double zscore_threshold = 3.5);
  void validate() const;
};

struct OutlierFlag {
  Date date;
  double value = 0;
  std::string reason;  // "physical-bound" or "zscore"

  bool operator==(const OutlierFlag&) const = default;
};

/// Physical-bound violations plus modified z-score 0.6745|x - median| / MAD
/// above the threshold. With MAD == 0 the z-score test is skipped.
std::vector<OutlierFlag> detect_outliers(const DailySeries& s, const OutlierRule& rule);

/// New version with the flagged slots set missing and flagged removed-outlier.
DailySeries remove_outliers(const DailySeries& s, std::span<const OutlierFlag> flags,
                            std::string_view created_by);

/// A fill computed but not yet persisted.
struct FillResult {
  DailySeries series;  // version = base version + 1, carries the CorrectionRecord
  std::size_t filled = 0;
};

struct RegressionOptions {
  std::size_t min_pairs = 30;
  double min_abs_r = 0.7;
};

/// Single neighbour: y = a + b·x fitted on jointly observed days. Several
/// neighbours: multiple OLS on days where the target and every neighbour are
/// observed. Predictions are clamped to the variable's physical bounds.
FillResult fill_regression(const DailySeries& target, std::span<const DailySeries* const> neighbors,
                           const RegressionOptions& opts, std::string_view created_by);

struct LocatedSeries {
  const DailySeries* series = nullptr;
  double lat = 0;
  double lon = 0;
};

/// Great-circle distance in km on a sphere of radius 6371 km.
double haversine_km(double lat1, double lon1, double lat2, double lon2);

FillResult fill_idw(const DailySeries& target, double target_lat, double target_lon,
                    std::span<const LocatedSeries> neighbors, double power,
                    std::string_view created_by);

/// prediction = (target_mean / k) · Σ vᵢ / meanᵢ over the k neighbours observed that day.
FillResult fill_normal_ratio(const DailySeries& target, double target_mean,
                             std::span<const DailySeries* const> neighbors,
                             std::span<const double> neighbor_means, std::string_view created_by);

/// Linear interpolation across interior gaps of at most `max_gap_days`.
FillResult fill_temporal_linear(const DailySeries& target, int max_gap_days,
                                std::string_view created_by);

/// Inserts values from an externally produced file. Every provided date must
/// currently be missing in `target`.
FillResult import_external_fill(const DailySeries& target, std::string_view raw,
                                const FormatSpec& spec, std::string_view created_by);

}  // namespace basinfo
