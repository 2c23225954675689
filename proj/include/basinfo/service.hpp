#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "basinfo/analysis.hpp"
#include "basinfo/auth.hpp"
#include "basinfo/catalogue.hpp"
#include "basinfo/correction.hpp"
#include "basinfo/ingest.hpp"
#include "basinfo/store.hpp"

namespace basinfo {

struct ServiceConfig {
  std::string secret;
  std::int64_t max_asset_bytes = std::int64_t{512} << 20;
  /// Stations outside a catchment but within this distance of its boundary
  /// count towards its coverage report.
  double coverage_buffer_km = 10.0;
  int password_iterations = 60000;
  /// ISO-8601 UTC timestamp source; defaults to the system clock.
  std::function<std::string()> clock;
};

std::string iso_timestamp(Clock::time_point t);

struct FillRequest {
  CorrectionMethod method = CorrectionMethod::TemporalLinear;
  std::vector<std::string> neighbors;
  RegressionOptions regression;
  double power = 2.0;
  int max_gap_days = 3;
  std::optional<DateRange> reference_window;
  std::string external_data;
  FormatSpec external_format;
};

FillRequest fill_request_from_json(const nlohmann::json& j);

struct Preview {
  std::string preview_id;
  int base_version = 1;
  FillResult result;
};

struct ExportRequest {
  std::vector<std::string> series_ids;
  FormatSpec format;
  std::optional<AggregationPolicy> aggregation;
  std::optional<DateRange> window;
};

/// One export block: header lines, '#' metadata, then delimited rows.
std::string export_block(const DailySeries& s, const Station* station, const FormatSpec& spec,
                         const std::optional<AggregationPolicy>& aggregation);

struct NewAsset {
  AssetKind kind = AssetKind::Document;
  std::string filename;
  std::optional<BoundingBox> bbox;
  std::string title;
  std::string abstract;
  std::vector<std::string> keywords;
  std::optional<std::string> study_area;
};

/// Application facade shared by the HTTP API and the CLI. Every operation
/// takes the acting principal and enforces permissions; objects the caller
/// cannot see are reported as NotFound.
class Service {
 public:
  Service(Store& store, ServiceConfig config);

  Store& store() { return store_; }
  std::string now() const;
  Date reference_date() const;

  std::string login(const std::string& username, const std::string& password);
  void logout(const std::string& token);
  Principal authenticate(const std::string& token) const;  // Unauthorized
  static Principal principal_of(const User& u);

  User add_user(const Principal& p, const std::string& username, const std::string& password,
                std::vector<std::string> groups, bool is_admin);
  std::vector<User> list_users(const Principal& p) const;
  PermissionGrant add_grant(const Principal& p, PermissionGrant g);
  std::vector<PermissionGrant> list_grants(const Principal& p) const;

  std::vector<Station> list_stations(const Principal& p) const;
  Station create_station(const Principal& p, const Station& s, const std::optional<std::string>& study_area);

  std::string register_series(const Principal& p, const DailySeries& v1);
  DailySeries ingest(const Principal& p, std::string_view raw, const FormatSpec& spec,
                     const std::string& station_id, Variable variable,
                     const std::optional<std::string>& series_id = std::nullopt);
  std::vector<SeriesInfo> list_series(const Principal& p) const;
  nlohmann::json series_detail(const Principal& p, const std::string& id) const;
  DailySeries series(const Principal& p, const std::string& id, std::optional<int> version,
                     Action action = Action::ViewData) const;
  GapReport gaps(const Principal& p, const std::string& id, std::optional<int> version) const;
  std::vector<AggregateRow> aggregate(const Principal& p, const std::string& id, const AggregationPolicy& policy,
                                      std::optional<int> version) const;

  Correlation correlate(const Principal& p, const std::string& a, const std::string& b) const;
  std::vector<Availability> availability(const Principal& p, const std::vector<std::string>& ids,
                                         DateRange period) const;
  std::optional<DateRange> overlap(const Principal& p, const std::vector<std::string>& ids, double min_fraction,
                                   Granularity granularity) const;
  CoverageReport coverage(const Principal& p, const std::string& catchment_id) const;

  std::vector<OutlierFlag> detect_outliers(const Principal& p, const std::string& id,
                                           std::optional<double> zscore_threshold) const;
  DailySeries remove_outliers(const Principal& p, const std::string& id, const std::vector<OutlierFlag>& flags,
                              std::optional<int> base_version);

  Preview preview_fill(const Principal& p, const std::string& id, const FillRequest& req);
  /// StalePreview when the series head moved since the preview was computed.
  DailySeries commit_preview(const Principal& p, const std::string& preview_id);
  DailySeries fill_and_commit(const Principal& p, const std::string& id, const FillRequest& req);

  std::string export_text(const Principal& p, const ExportRequest& req) const;

  std::vector<Catchment> list_catchments(const Principal& p) const;
  Catchment create_catchment(const Principal& p, Catchment c, const std::optional<std::string>& study_area);
  Polygon polygon_from_asset(const Principal& p, const std::string& asset_id, std::size_t index) const;
  std::vector<std::string> link_stations(const Principal& p, const std::string& catchment_id);

  Asset register_asset(const Principal& p, std::string_view bytes, const NewAsset& meta);
  Asset asset(const Principal& p, const std::string& id) const;
  std::string asset_bytes(const Principal& p, const std::string& id) const;

  csw::Response csw(const Principal& p, const std::multimap<std::string, std::string>& params,
                    std::string_view base_url) const;

  bool allowed(const Principal& p, const std::string& object_id, Action action) const;

 private:
  DatasetRef require(const Principal& p, const std::string& id, Action action,
                     std::optional<DatasetKind> kind) const;
  void require_catchment(const Principal& p, const std::string& id, Action action) const;
  std::string resolve_study_area(const std::optional<std::string>& requested) const;
  void require_study_area_edit(const Principal& p, const std::string& study_area) const;
  void require_admin(const Principal& p) const;
  FillResult compute_fill(const Principal& p, const DailySeries& target, const FillRequest& req) const;
  DailySeries commit_result(FillResult result, int base_version);
  MetadataRecord series_record(const DailySeries& s, const Station& st) const;

  Store& store_;
  ServiceConfig config_;
  SessionStore sessions_;
  std::once_flag dummy_once_;
  std::string dummy_verifier_;

  mutable std::mutex preview_mu_;
  struct CachedPreview {
    std::string user_id;
    Preview preview;
  };
  std::map<std::string, CachedPreview> previews_;
  std::deque<std::string> preview_order_;
};

}  // namespace basinfo
