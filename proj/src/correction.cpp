#include "basinfo/correction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include <Eigen/Dense>

#include "basinfo/analysis.hpp"
#include "basinfo/digest.hpp"
#include "basinfo/error.hpp"

namespace basinfo {
namespace {

constexpr double kEarthRadiusKm = 6371.0;

DailySeries next_version(const DailySeries& base, CorrectionMethod method,
                         std::map<std::string, std::string> params,
                         std::vector<std::string> sources, std::string_view created_by) {
  DailySeries out = base;
  out.version = base.version + 1;
  out.parent_version = base.version;
  out.correction = CorrectionRecord{method, std::move(params), std::move(sources), {},
                                    std::string(created_by)};
  return out;
}

double clamp_physical(Variable v, double x) {
  return std::clamp(x, v.physical_min(), v.physical_max());
}

void set_filled(DailySeries& s, std::size_t i, double v) {
  s.values[i] = clamp_physical(s.variable, v);
  s.flags[i] = Flag::Filled;
}

void require_same_variable(const DailySeries& target, const DailySeries& neighbor) {
  if (!(neighbor.variable == target.variable)) {
    throw Error(ErrorCode::VariableMismatch,
                "neighbour " + neighbor.id + " holds " + std::string(neighbor.variable.name()) +
                    ", target holds " + std::string(target.variable.name()),
                neighbor.id);
  }
}

const Slot& slot_on(const DailySeries& s, Date d) {
  static const Slot kMissing;
  if (!s.range().contains(d)) return kMissing;
  return s.values[static_cast<std::size_t>(d - s.start)];
}

double median_of(std::vector<double> v) {
  const auto n = v.size();
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2), v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2));
  return (lo + hi) / 2.0;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i];
  }
  return out;
}

}  // namespace

OutlierRule OutlierRule::for_variable(Variable v, double zscore_threshold) {
  return {v.physical_min(), v.physical_max(), zscore_threshold};
}

void OutlierRule::validate() const {
  if (!(physical_min < physical_max)) throw Error(ErrorCode::InvalidArgument, "physical min must be below max");
  if (!(zscore_threshold > 0)) throw Error(ErrorCode::InvalidArgument, "z-score threshold must be positive");
}

std::vector<OutlierFlag> detect_outliers(const DailySeries& s, const OutlierRule& rule) {
  rule.validate();
  std::vector<double> observed;
  for (const auto& v : s.values) {
    if (v) observed.push_back(*v);
  }
  double median = 0, mad = 0;
  if (!observed.empty()) {
    median = median_of(observed);
    std::vector<double> dev;
    dev.reserve(observed.size());
    for (double x : observed) dev.push_back(std::abs(x - median));
    mad = median_of(std::move(dev));
  }
  std::vector<OutlierFlag> flags;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s.values[i]) continue;
    const double x = *s.values[i];
    if (x < rule.physical_min || x > rule.physical_max) {
      flags.push_back({s.date_at(i), x, "physical-bound"});
    } else if (mad > 0 && 0.6745 * std::abs(x - median) / mad > rule.zscore_threshold) {
      flags.push_back({s.date_at(i), x, "zscore"});
    }
  }
  return flags;
}

DailySeries remove_outliers(const DailySeries& s, std::span<const OutlierFlag> flags,
                            std::string_view created_by) {
  if (flags.empty()) throw Error(ErrorCode::NoOp, "no outliers selected for removal");
  std::vector<std::string> dates;
  auto out = s;
  for (const auto& f : flags) {
    const auto i = index_of(s, f.date);
    if (!s.values[i] || *s.values[i] != f.value) {
      throw Error(ErrorCode::InvalidArgument,
                  "flag for " + f.date.iso() + " does not match an observed value", f.date.iso());
    }
    out.values[i].reset();
    out.flags[i] = Flag::RemovedOutlier;
    dates.push_back(f.date.iso());
  }
  std::sort(dates.begin(), dates.end());
  dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
  auto result = next_version(s, CorrectionMethod::OutlierRemoval,
                             {{"count", std::to_string(dates.size())}, {"dates", join(dates)}}, {},
                             created_by);
  result.values = std::move(out.values);
  result.flags = std::move(out.flags);
  return result;
}

FillResult fill_regression(const DailySeries& target, std::span<const DailySeries* const> neighbors,
                           const RegressionOptions& opts, std::string_view created_by) {
  if (neighbors.empty()) throw Error(ErrorCode::NoNeighbors, "regression needs at least one neighbour");
  std::vector<std::string> sources, neighbor_ids;
  for (const auto* n : neighbors) {
    require_same_variable(target, *n);
    sources.push_back(n->station_id);
    neighbor_ids.push_back(n->id);
  }

  // Training rows: days where the target and every regressor are observed.
  const std::size_t k = neighbors.size();
  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (!target.values[i]) continue;
    const Date d = target.date_at(i);
    bool complete = true;
    for (const auto* n : neighbors) complete = complete && slot_on(*n, d).has_value();
    if (complete) train.push_back(i);
  }
  if (train.size() < opts.min_pairs || train.size() < k + 2) {
    throw Error(ErrorCode::InsufficientPairs,
                "found " + std::to_string(train.size()) + " training days, need " +
                    std::to_string(std::max(opts.min_pairs, k + 2)),
                std::to_string(train.size()));
  }

  std::map<std::string, std::string> params;
  std::vector<double> coef(k + 1, 0.0);  // intercept, then one slope per neighbour
  double r = 0;
  if (k == 1) {
    const auto& n = *neighbors[0];
    double mx = 0, my = 0;
    for (auto i : train) {
      mx += *slot_on(n, target.date_at(i));
      my += *target.values[i];
    }
    mx /= static_cast<double>(train.size());
    my /= static_cast<double>(train.size());
    double sxx = 0, syy = 0, sxy = 0;
    for (auto i : train) {
      const double dx = *slot_on(n, target.date_at(i)) - mx;
      const double dy = *target.values[i] - my;
      sxx += dx * dx;
      syy += dy * dy;
      sxy += dx * dy;
    }
    if (sxx == 0 || syy == 0) throw Error(ErrorCode::DegenerateInput, "training sample has zero variance");
    r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    if (std::abs(r) < opts.min_abs_r) {
      throw Error(ErrorCode::WeakCorrelation,
                  "|r| = " + shortest_double(std::abs(r)) + " below threshold " +
                      shortest_double(opts.min_abs_r),
                  shortest_double(r));
    }
    coef[1] = sxy / sxx;
    coef[0] = my - coef[1] * mx;
  } else {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(k + 1));
    Eigen::VectorXd y(static_cast<Eigen::Index>(train.size()));
    for (std::size_t row = 0; row < train.size(); ++row) {
      const auto ri = static_cast<Eigen::Index>(row);
      const Date d = target.date_at(train[row]);
      X(ri, 0) = 1.0;
      for (std::size_t j = 0; j < k; ++j) X(ri, static_cast<Eigen::Index>(j + 1)) = *slot_on(*neighbors[j], d);
      y(ri) = *target.values[train[row]];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < static_cast<Eigen::Index>(k + 1)) {
      throw Error(ErrorCode::DegenerateInput, "regressors are collinear");
    }
    Eigen::VectorXd beta = qr.solve(y);
    for (std::size_t j = 0; j <= k; ++j) coef[j] = beta(static_cast<Eigen::Index>(j));
    const double ss_tot = (y.array() - y.mean()).square().sum();
    const double ss_res = (y - X * beta).squaredNorm();
    if (ss_tot == 0) throw Error(ErrorCode::DegenerateInput, "target has zero variance");
    r = std::sqrt(std::max(0.0, 1.0 - ss_res / ss_tot));
  }

  FillResult result{next_version(target, k == 1 ? CorrectionMethod::Regression1 : CorrectionMethod::RegressionMulti,
                                 {}, sources, created_by),
                    0};
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target.values[i]) continue;
    const Date d = target.date_at(i);
    double pred = coef[0];
    bool complete = true;
    for (std::size_t j = 0; j < k && complete; ++j) {
      const auto& v = slot_on(*neighbors[j], d);
      if (v) pred += coef[j + 1] * *v;
      else complete = false;
    }
    if (!complete) continue;
    set_filled(result.series, i, pred);
    ++result.filled;
  }
  params["intercept"] = shortest_double(coef[0]);
  for (std::size_t j = 0; j < k; ++j) {
    params[k == 1 ? std::string("slope") : "slope." + std::to_string(j)] = shortest_double(coef[j + 1]);
  }
  params["r"] = shortest_double(r);
  params["n"] = std::to_string(train.size());
  params["minPairs"] = std::to_string(opts.min_pairs);
  params["minAbsR"] = shortest_double(opts.min_abs_r);
  params["neighborSeries"] = join(neighbor_ids);
  params["filled"] = std::to_string(result.filled);
  result.series.correction->parameters = std::move(params);
  return result;
}

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kRad = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * kRad;
  const double dlon = (lon2 - lon1) * kRad;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * kRad) * std::cos(lat2 * kRad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

FillResult fill_idw(const DailySeries& target, double target_lat, double target_lon,
                    std::span<const LocatedSeries> neighbors, double power,
                    std::string_view created_by) {
  if (neighbors.empty()) throw Error(ErrorCode::NoNeighbors, "IDW needs at least one neighbour");
  if (!(power > 0)) throw Error(ErrorCode::InvalidArgument, "IDW power must be positive");
  std::vector<std::string> sources, ids;
  std::vector<double> dist;
  for (const auto& n : neighbors) {
    require_same_variable(target, *n.series);
    sources.push_back(n.series->station_id);
    ids.push_back(n.series->id);
    dist.push_back(haversine_km(target_lat, target_lon, n.lat, n.lon));
  }
  // Weights are scaled by the nearest non-zero distance; equal distances give equal weights exactly.
  double nearest = std::numeric_limits<double>::infinity();
  for (double x : dist) {
    if (x > 0) nearest = std::min(nearest, x);
  }
  FillResult result{next_version(target, CorrectionMethod::Idw, {}, sources, created_by), 0};
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target.values[i]) continue;
    const Date d = target.date_at(i);
    double num = 0, den = 0;
    std::optional<double> colocated;
    for (std::size_t j = 0; j < neighbors.size(); ++j) {
      const auto& v = slot_on(*neighbors[j].series, d);
      if (!v) continue;
      if (dist[j] == 0) {
        colocated = *v;
        break;
      }
      const double w = std::pow(nearest / dist[j], power);
      num += w * *v;
      den += w;
    }
    if (colocated) {
      set_filled(result.series, i, *colocated);
    } else if (den > 0) {
      set_filled(result.series, i, num / den);
    } else {
      continue;
    }
    ++result.filled;
  }
  std::vector<std::string> dists;
  for (double x : dist) dists.push_back(shortest_double(x));
  result.series.correction->parameters = {{"power", shortest_double(power)},
                                          {"distancesKm", join(dists)},
                                          {"neighborSeries", join(ids)},
                                          {"filled", std::to_string(result.filled)}};
  return result;
}

FillResult fill_normal_ratio(const DailySeries& target, double target_mean,
                             std::span<const DailySeries* const> neighbors,
                             std::span<const double> neighbor_means, std::string_view created_by) {
  if (target.variable.code != VariableCode::Precipitation) {
    throw Error(ErrorCode::NonPrecipitation, "normal ratio applies to precipitation only",
                std::string(target.variable.name()));
  }
  if (neighbors.empty()) throw Error(ErrorCode::NoNeighbors, "normal ratio needs at least one neighbour");
  if (neighbors.size() != neighbor_means.size()) {
    throw Error(ErrorCode::InvalidArgument, "one reference mean per neighbour is required");
  }
  if (!(target_mean > 0)) throw Error(ErrorCode::ZeroMean, "target reference mean is not positive", target.id);
  std::vector<std::string> sources, ids, means;
  for (std::size_t j = 0; j < neighbors.size(); ++j) {
    require_same_variable(target, *neighbors[j]);
    if (!(neighbor_means[j] > 0)) {
      throw Error(ErrorCode::ZeroMean, "reference mean of " + neighbors[j]->id + " is not positive",
                  neighbors[j]->id);
    }
    sources.push_back(neighbors[j]->station_id);
    ids.push_back(neighbors[j]->id);
    means.push_back(shortest_double(neighbor_means[j]));
  }
  FillResult result{next_version(target, CorrectionMethod::NormalRatio, {}, sources, created_by), 0};
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target.values[i]) continue;
    const Date d = target.date_at(i);
    double ratio_sum = 0;
    int k = 0;
    for (std::size_t j = 0; j < neighbors.size(); ++j) {
      const auto& v = slot_on(*neighbors[j], d);
      if (!v) continue;
      ratio_sum += *v / neighbor_means[j];
      ++k;
    }
    if (k == 0) continue;
    set_filled(result.series, i, target_mean / k * ratio_sum);
    ++result.filled;
  }
  result.series.correction->parameters = {{"targetMean", shortest_double(target_mean)},
                                          {"neighborMeans", join(means)},
                                          {"neighborSeries", join(ids)},
                                          {"filled", std::to_string(result.filled)}};
  return result;
}

FillResult fill_temporal_linear(const DailySeries& target, int max_gap_days,
                                std::string_view created_by) {
  if (max_gap_days < 0) throw Error(ErrorCode::InvalidArgument, "max gap days must be >= 0");
  FillResult result{next_version(target, CorrectionMethod::TemporalLinear,
                                 {{"maxGapDays", std::to_string(max_gap_days)}}, {}, created_by),
                    0};
  for (const auto& gap : detect_gaps(target).gaps) {
    if (gap.first == target.start || gap.last == target.end) continue;
    const auto len = gap.length();
    if (len > max_gap_days) continue;
    const auto lo = static_cast<std::size_t>(gap.first - target.start) - 1;
    const auto hi = static_cast<std::size_t>(gap.last - target.start) + 1;
    const double a = *target.values[lo];
    const double b = *target.values[hi];
    for (std::int64_t i = 1; i <= len; ++i) {
      set_filled(result.series, lo + static_cast<std::size_t>(i),
                 a + (b - a) * static_cast<double>(i) / static_cast<double>(len + 1));
      ++result.filled;
    }
  }
  result.series.correction->parameters["filled"] = std::to_string(result.filled);
  return result;
}

FillResult import_external_fill(const DailySeries& target, std::string_view raw,
                                const FormatSpec& spec, std::string_view created_by) {
  const auto rows = parse_rows(raw, spec);
  std::map<Date, double> provided;
  for (const auto& row : rows) {
    if (!row.value) continue;
    auto [it, inserted] = provided.emplace(row.date, *row.value);
    if (!inserted && it->second != *row.value) {
      throw Error(ErrorCode::DuplicateDate, "conflicting values for " + row.date.iso(), row.date.iso());
    }
  }
  if (provided.empty()) throw Error(ErrorCode::EmptyInput, "fill file supplies no values");
  FillResult result{next_version(target, CorrectionMethod::External,
                                 {{"checksum", "sha256:" + sha256_hex(raw)}}, {}, created_by),
                    0};
  for (const auto& [d, v] : provided) {
    const auto i = index_of(target, d);
    if (target.values[i]) {
      throw Error(ErrorCode::OverwriteAttempt, d.iso() + " is already observed", d.iso());
    }
    set_filled(result.series, i, v);
    ++result.filled;
  }
  result.series.correction->parameters["filled"] = std::to_string(result.filled);
  return result;
}

}  // namespace basinfo
