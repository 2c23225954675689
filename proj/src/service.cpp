#include "basinfo/service.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <set>

#include "basinfo/digest.hpp"
#include "basinfo/error.hpp"
#include "basinfo/json_io.hpp"

namespace basinfo {
namespace {

constexpr std::size_t kPreviewCacheSize = 256;

[[noreturn]] void not_found(const std::string& id) { throw Error(ErrorCode::NotFound, "not found: " + id, id); }

ObjectRef study_area_object(const StudyArea& a) { return ObjectRef{a.id, a.owner, a.id}; }

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::string iso_timestamp(Clock::time_point t) {
  const std::time_t tt = Clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

FillRequest fill_request_from_json(const nlohmann::json& j) {
  FillRequest r;
  r.method = parse_correction_method(j.at("method").get<std::string>());
  if (!is_fill_method(r.method)) {
    throw Error(ErrorCode::InvalidArgument, "'" + std::string(to_string(r.method)) + "' is not a fill method");
  }
  if (j.contains("neighbors")) r.neighbors = j["neighbors"].get<std::vector<std::string>>();
  if (j.contains("minPairs")) r.regression.min_pairs = j["minPairs"].get<std::size_t>();
  if (j.contains("minAbsR")) r.regression.min_abs_r = j["minAbsR"].get<double>();
  if (j.contains("power")) r.power = j["power"].get<double>();
  if (j.contains("maxGapDays")) r.max_gap_days = j["maxGapDays"].get<int>();
  if (j.contains("referenceWindow")) r.reference_window = j["referenceWindow"].get<DateRange>();
  if (j.contains("data")) r.external_data = j["data"].get<std::string>();
  if (j.contains("format")) r.external_format = j["format"].get<FormatSpec>();
  if (r.power <= 0) throw Error(ErrorCode::InvalidArgument, "power must be > 0");
  if (r.max_gap_days < 0) throw Error(ErrorCode::InvalidArgument, "maxGapDays must be >= 0");
  return r;
}

std::string export_block(const DailySeries& s, const Station* station, const FormatSpec& spec,
                         const std::optional<AggregationPolicy>& aggregation) {
  std::string out;
  for (int i = 0; i < spec.header_lines; ++i) out += "header " + std::to_string(i + 1) + "\n";
  out += "# series: " + s.id + "\n";
  out += "# station: " + s.station_id;
  if (station) out += " (" + station->name + ")";
  out += "\n# variable: " + std::string(s.variable.name()) + "\n";
  out += "# unit: " + std::string(s.variable.unit()) + "\n";
  out += "# version: " + std::to_string(s.version) + "\n";
  if (s.correction) {
    out += "# method: " + std::string(to_string(s.correction->method)) + "\n";
  }
  if (!aggregation) {
    out += render_rows(s, spec);
    return out;
  }
  out += "# aggregation: " + std::string(aggregation->step == AggregationStep::Monthly  ? "monthly"
                                         : aggregation->step == AggregationStep::Yearly ? "yearly"
                                                                                        : "hydro-year") +
         "\n";
  for (const auto& row : aggregate(s, *aggregation)) {
    out += row.label;
    out += spec.delimiter;
    out += row.value ? format_value(*row.value, spec.decimal_separator) : spec.missing_codes.front();
    out += '\n';
  }
  return out;
}

Service::Service(Store& store, ServiceConfig config)
    : store_(store), config_(std::move(config)), sessions_(config_.secret.empty() ? random_hex(32) : config_.secret) {
  if (!config_.clock) config_.clock = [] { return iso_timestamp(Clock::now()); };
}

std::string Service::now() const { return config_.clock(); }

Date Service::reference_date() const {
  if (auto s = store_.setting("reference_date")) return Date::parse_iso(*s);
  return Date::parse_iso(now().substr(0, 10));
}

std::string Service::login(const std::string& username, const std::string& password) {
  auto u = store_.user_by_name(username);
  // Verify against a dummy when the user is unknown so both failures cost the same.
  std::call_once(dummy_once_, [this] { dummy_verifier_ = PasswordVerifier::create("", config_.password_iterations).encode(); });
  const auto verifier = PasswordVerifier::parse(u ? u->verifier : dummy_verifier_);
  const bool ok = verifier.verify(password);
  if (!u || !ok) throw Error(ErrorCode::AuthFailed, "invalid username or password");
  return sessions_.create(u->id);
}

void Service::logout(const std::string& token) { sessions_.revoke(token); }

Principal Service::principal_of(const User& u) { return Principal{u.id, u.groups, u.is_admin}; }

Principal Service::authenticate(const std::string& token) const {
  auto id = sessions_.resolve(token);
  if (!id) throw Error(ErrorCode::Unauthorized, "missing, expired or revoked session");
  auto u = store_.user(*id);
  if (!u) throw Error(ErrorCode::Unauthorized, "session user no longer exists");
  return principal_of(*u);
}

void Service::require_admin(const Principal& p) const {
  if (!p.is_admin) throw Error(ErrorCode::Forbidden, "administrator privileges required");
}

User Service::add_user(const Principal& p, const std::string& username, const std::string& password,
                       std::vector<std::string> groups, bool is_admin) {
  require_admin(p);
  if (username.empty()) throw Error(ErrorCode::InvalidArgument, "username must not be empty");
  if (password.empty()) throw Error(ErrorCode::InvalidArgument, "password must not be empty");
  User u{"u-" + random_hex(8), username,
         PasswordVerifier::create(password, config_.password_iterations).encode(), std::move(groups), is_admin};
  store_.add_user(u);
  return u;
}

std::vector<User> Service::list_users(const Principal& p) const {
  require_admin(p);
  return store_.users();
}

PermissionGrant Service::add_grant(const Principal& p, PermissionGrant g) {
  if (g.subject_id.empty()) throw Error(ErrorCode::InvalidArgument, "grant subject must not be empty");
  if (g.actions.empty()) throw Error(ErrorCode::InvalidArgument, "grant must include at least one action");
  if (!p.is_admin) {
    if (auto a = store_.study_area(g.object_id)) {
      const auto grants = store_.grants();
      if (!check_permission(p, study_area_object(*a), Action::Manage, grants)) {
        throw Error(ErrorCode::Forbidden, "manage permission required on " + g.object_id);
      }
    } else {
      require(p, g.object_id, Action::Manage, std::nullopt);
    }
  } else if (!store_.study_area(g.object_id) && !store_.dataset(g.object_id)) {
    not_found(g.object_id);
  }
  if (g.subject_kind == SubjectKind::User && !store_.user(g.subject_id)) {
    throw Error(ErrorCode::InvalidArgument, "unknown user " + g.subject_id, g.subject_id);
  }
  g.id = "g-" + random_hex(8);
  store_.add_grant(g);
  return g;
}

std::vector<PermissionGrant> Service::list_grants(const Principal& p) const {
  require_admin(p);
  return store_.grants();
}

bool Service::allowed(const Principal& p, const std::string& object_id, Action action) const {
  const auto grants = store_.grants();
  if (auto d = store_.dataset(object_id)) return check_permission(p, d->object, action, grants);
  if (auto a = store_.study_area(object_id)) return check_permission(p, study_area_object(*a), action, grants);
  return false;
}

DatasetRef Service::require(const Principal& p, const std::string& id, Action action,
                            std::optional<DatasetKind> kind) const {
  auto d = store_.dataset(id);
  if (!d || (kind && d->kind != *kind)) not_found(id);
  const auto grants = store_.grants();
  if (!check_permission(p, d->object, Action::ViewMetadata, grants)) not_found(id);
  if (!check_permission(p, d->object, action, grants)) {
    throw Error(ErrorCode::Forbidden, std::string(to_string(action)) + " permission required on " + id, id);
  }
  return *d;
}

void Service::require_catchment(const Principal& p, const std::string& id, Action action) const {
  try {
    require(p, id, action, DatasetKind::Catchment);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NotFound) throw Error(ErrorCode::UnknownCatchment, e.what(), id);
    throw;
  }
}

std::string Service::resolve_study_area(const std::optional<std::string>& requested) const {
  if (requested) {
    if (!store_.study_area(*requested)) not_found(*requested);
    return *requested;
  }
  const auto areas = store_.study_areas();
  if (areas.size() != 1) throw Error(ErrorCode::InvalidArgument, "studyArea is required");
  return areas.front().id;
}

void Service::require_study_area_edit(const Principal& p, const std::string& study_area) const {
  auto a = store_.study_area(study_area);
  if (!a) not_found(study_area);
  const auto grants = store_.grants();
  const auto obj = study_area_object(*a);
  if (!check_permission(p, obj, Action::ViewMetadata, grants) && !check_permission(p, obj, Action::Edit, grants)) {
    not_found(study_area);
  }
  if (!check_permission(p, obj, Action::Edit, grants)) {
    throw Error(ErrorCode::Forbidden, "edit permission required on study area " + study_area, study_area);
  }
}

std::vector<Station> Service::list_stations(const Principal& p) const {
  const auto grants = store_.grants();
  std::vector<Station> out;
  for (auto& s : store_.stations()) {
    auto d = store_.dataset(s.id);
    if (d && check_permission(p, d->object, Action::ViewMetadata, grants)) out.push_back(std::move(s));
  }
  return out;
}

Station Service::create_station(const Principal& p, const Station& s, const std::optional<std::string>& study_area) {
  const auto area = resolve_study_area(study_area);
  require_study_area_edit(p, area);
  Station st = s;
  if (st.id.empty()) st.id = "st-" + random_hex(6);
  validate_station(st);
  if (st.catchment_id && !store_.catchment(*st.catchment_id)) {
    throw Error(ErrorCode::UnknownCatchment, "unknown catchment " + *st.catchment_id, *st.catchment_id);
  }
  const auto keyword = st.kind == StationKind::Rainfall ? std::string("rain gauge") : std::string(to_string(st.kind));
  MetadataRecord rec{st.id,
                     "Station " + st.name,
                     std::string(to_string(st.kind)) + " station " + st.external_id + " operated by " +
                         st.operator_name + ", elevation " + shortest_double(st.elevation) + " m, established " +
                         std::to_string(st.established),
                     {"station", keyword, st.name},
                     RecordType::Station,
                     BoundingBox{st.lon, st.lat, st.lon, st.lat},
                     std::nullopt,
                     now()};
  store_.create_station(st, area, p.user_id.empty() ? "anonymous" : p.user_id, rec);
  return st;
}

MetadataRecord Service::series_record(const DailySeries& s, const Station& st) const {
  std::vector<std::string> keywords{std::string(s.variable.name()), st.name, "daily"};
  if (st.kind == StationKind::Rainfall) keywords.insert(keywords.begin() + 1, "rainfall");
  return MetadataRecord{s.id,
                        st.name + " daily " + std::string(s.variable.name()),
                        "Daily " + std::string(s.variable.name()) + " (" + std::string(s.variable.unit()) +
                            ") observed at " + std::string(to_string(st.kind)) + " station " + st.name + " (" +
                            st.external_id + ")",
                        std::move(keywords),
                        RecordType::Series,
                        BoundingBox{st.lon, st.lat, st.lon, st.lat},
                        s.range(),
                        now()};
}

std::string Service::register_series(const Principal& p, const DailySeries& v1) {
  auto st = store_.station(v1.station_id);
  if (!st) throw Error(ErrorCode::UnknownStation, "unknown station " + v1.station_id, v1.station_id);
  const auto area = store_.dataset(st->id)->object.study_area.value();
  require_study_area_edit(p, area);
  DailySeries s = v1;
  if (s.id.empty()) s.id = "se-" + random_hex(6);
  store_.create_series(s, area, p.user_id.empty() ? "anonymous" : p.user_id, series_record(s, *st));
  return s.id;
}

DailySeries Service::ingest(const Principal& p, std::string_view raw, const FormatSpec& spec,
                            const std::string& station_id, Variable variable,
                            const std::optional<std::string>& series_id) {
  if (!store_.station(station_id)) {
    throw Error(ErrorCode::UnknownStation, "unknown station " + station_id, station_id);
  }
  auto s = parse_series(raw, spec, series_id.value_or("se-" + random_hex(6)), station_id, variable);
  register_series(p, s);
  return s;
}

std::vector<SeriesInfo> Service::list_series(const Principal& p) const {
  const auto grants = store_.grants();
  std::vector<SeriesInfo> out;
  for (auto& s : store_.series_list()) {
    if (check_permission(p, ObjectRef{s.id, s.owner, s.study_area}, Action::ViewMetadata, grants)) {
      out.push_back(std::move(s));
    }
  }
  return out;
}

nlohmann::json Service::series_detail(const Principal& p, const std::string& id) const {
  require(p, id, Action::ViewMetadata, DatasetKind::Series);
  auto info = store_.series_info(id).value();
  nlohmann::json versions = nlohmann::json::array();
  for (const auto& v : store_.load_versions(id)) {
    auto j = series_summary_json(v);
    j["digest"] = store_.stored_digest(id, v.version);
    versions.push_back(std::move(j));
  }
  return {{"id", id},
          {"stationId", info.station_id},
          {"variable", info.variable.name()},
          {"unit", info.variable.unit()},
          {"studyArea", info.study_area},
          {"headVersion", info.head_version},
          {"metadata", store_.metadata(id).value()},
          {"versions", std::move(versions)}};
}

DailySeries Service::series(const Principal& p, const std::string& id, std::optional<int> version,
                            Action action) const {
  require(p, id, action, DatasetKind::Series);
  return store_.load_series(id, version);
}

GapReport Service::gaps(const Principal& p, const std::string& id, std::optional<int> version) const {
  require(p, id, Action::ViewData, DatasetKind::Series);
  const int v = version.value_or(store_.series_info(id)->head_version);
  return store_.gap_report(id, v);
}

std::vector<AggregateRow> Service::aggregate(const Principal& p, const std::string& id,
                                             const AggregationPolicy& policy, std::optional<int> version) const {
  policy.validate();
  require(p, id, Action::ViewData, DatasetKind::Series);
  if (policy.gap_policy == GapPolicy::UseFilled) {
    const auto versions = store_.load_versions(id);
    return basinfo::aggregate(latest_filled_version(versions), policy);
  }
  return basinfo::aggregate(store_.load_series(id, version), policy);
}

Correlation Service::correlate(const Principal& p, const std::string& a, const std::string& b) const {
  const auto sa = series(p, a, std::nullopt);
  const auto sb = series(p, b, std::nullopt);
  return basinfo::correlate(sa, sb);
}

std::vector<Availability> Service::availability(const Principal& p, const std::vector<std::string>& ids,
                                                DateRange period) const {
  if (ids.empty()) throw Error(ErrorCode::InvalidArgument, "at least one series is required");
  std::vector<DailySeries> loaded;
  for (const auto& id : ids) loaded.push_back(series(p, id, std::nullopt));
  std::vector<const DailySeries*> ptrs;
  for (const auto& s : loaded) ptrs.push_back(&s);
  return basinfo::availability(ptrs, period);
}

std::optional<DateRange> Service::overlap(const Principal& p, const std::vector<std::string>& ids,
                                          double min_fraction, Granularity granularity) const {
  if (ids.size() < 2) throw Error(ErrorCode::InvalidArgument, "at least two series are required");
  if (!(min_fraction >= 0 && min_fraction <= 1)) {
    throw Error(ErrorCode::InvalidArgument, "minFraction must lie in [0, 1]");
  }
  std::vector<DailySeries> loaded;
  for (const auto& id : ids) loaded.push_back(series(p, id, std::nullopt));
  std::vector<const DailySeries*> ptrs;
  for (const auto& s : loaded) ptrs.push_back(&s);
  return overlap_period(ptrs, min_fraction, granularity);
}

CoverageReport Service::coverage(const Principal& p, const std::string& catchment_id) const {
  require_catchment(p, catchment_id, Action::ViewData);
  const auto all = store_.catchments();
  const auto root = store_.catchment(catchment_id).value();

  std::set<std::string> in_tree;
  for (const auto& c : all) {
    for (std::optional<std::string> cur = c.id; cur;) {
      if (*cur == catchment_id) {
        in_tree.insert(c.id);
        break;
      }
      auto it = std::find_if(all.begin(), all.end(), [&](const Catchment& x) { return x.id == *cur; });
      cur = it == all.end() ? std::nullopt : it->parent_id;
    }
  }

  const auto grants = store_.grants();
  std::vector<Station> stations;
  for (const auto& st : store_.stations()) {
    const bool linked = st.catchment_id && in_tree.count(*st.catchment_id);
    const bool near =
        !linked && distance_to_polygon_km({st.lon, st.lat}, root.geometry) <= config_.coverage_buffer_km;
    if (linked || near) stations.push_back(st);
  }
  std::vector<DailySeries> loaded;
  for (const auto& info : store_.series_list()) {
    const bool member = std::any_of(stations.begin(), stations.end(),
                                    [&](const Station& s) { return s.id == info.station_id; });
    if (member && check_permission(p, ObjectRef{info.id, info.owner, info.study_area}, Action::ViewData, grants)) {
      loaded.push_back(store_.load_series(info.id));
    }
  }
  std::vector<const DailySeries*> ptrs;
  for (const auto& s : loaded) ptrs.push_back(&s);
  return coverage_report(catchment_id, stations, ptrs, reference_date());
}

std::vector<OutlierFlag> Service::detect_outliers(const Principal& p, const std::string& id,
                                                  std::optional<double> zscore_threshold) const {
  const auto s = series(p, id, std::nullopt);
  return basinfo::detect_outliers(s, OutlierRule::for_variable(s.variable, zscore_threshold.value_or(3.5)));
}

DailySeries Service::remove_outliers(const Principal& p, const std::string& id,
                                     const std::vector<OutlierFlag>& flags, std::optional<int> base_version) {
  const auto head = series(p, id, std::nullopt, Action::Edit);
  if (base_version && *base_version != head.version) {
    throw Error(ErrorCode::StalePreview, "series " + id + " changed since version " + std::to_string(*base_version),
                std::to_string(head.version));
  }
  const auto detected =
      basinfo::detect_outliers(head, OutlierRule::for_variable(head.variable));
  for (const auto& f : flags) {
    const bool known = std::any_of(detected.begin(), detected.end(),
                                   [&](const OutlierFlag& d) { return d.date == f.date && d.value == f.value; });
    if (!known) {
      throw Error(ErrorCode::InvalidArgument, "flag on " + f.date.iso() + " is not a detected outlier", f.date.iso());
    }
  }
  auto next = basinfo::remove_outliers(head, flags, p.user_id);
  return commit_result(FillResult{std::move(next), flags.size()}, head.version);
}

FillResult Service::compute_fill(const Principal& p, const DailySeries& target, const FillRequest& req) const {
  std::vector<DailySeries> neighbors;
  std::vector<Station> stations;
  for (const auto& nid : req.neighbors) {
    if (nid == target.id) throw Error(ErrorCode::InvalidArgument, "a series cannot be its own neighbour", nid);
    neighbors.push_back(series(p, nid, std::nullopt));
    stations.push_back(store_.station(neighbors.back().station_id).value());
  }
  std::vector<const DailySeries*> ptrs;
  for (const auto& n : neighbors) ptrs.push_back(&n);

  auto window_mean = [&](const DailySeries& s) {
    const DateRange want = req.reference_window.value_or(target.range());
    auto w = intersect(want, s.range());
    if (!w) throw Error(ErrorCode::InsufficientData, "series " + s.id + " has no data in the reference window", s.id);
    auto stats = basic_stats(s, *w);
    if (!stats.mean) throw Error(ErrorCode::InsufficientData, "series " + s.id + " has no data in the reference window", s.id);
    return *stats.mean;
  };

  FillResult result;
  switch (req.method) {
    case CorrectionMethod::Regression1:
    case CorrectionMethod::RegressionMulti:
      if (neighbors.empty()) throw Error(ErrorCode::NoNeighbors, "regression needs at least one neighbour");
      if (req.method == CorrectionMethod::Regression1 && neighbors.size() != 1) {
        throw Error(ErrorCode::InvalidArgument, "regression-1 takes exactly one neighbour");
      }
      result = fill_regression(target, ptrs, req.regression, p.user_id);
      break;
    case CorrectionMethod::Idw: {
      const auto st = store_.station(target.station_id).value();
      std::vector<LocatedSeries> located;
      for (std::size_t i = 0; i < neighbors.size(); ++i) located.push_back({&neighbors[i], stations[i].lat, stations[i].lon});
      result = fill_idw(target, st.lat, st.lon, located, req.power, p.user_id);
      break;
    }
    case CorrectionMethod::NormalRatio: {
      if (target.variable.code != VariableCode::Precipitation) {
        throw Error(ErrorCode::NonPrecipitation, "normal ratio applies to precipitation only");
      }
      if (neighbors.empty()) throw Error(ErrorCode::NoNeighbors, "normal ratio needs at least one neighbour");
      std::vector<double> means;
      for (const auto& n : neighbors) means.push_back(window_mean(n));
      result = fill_normal_ratio(target, window_mean(target), ptrs, means, p.user_id);
      if (req.reference_window) {
        result.series.correction->parameters["referenceWindow"] =
            req.reference_window->first.iso() + "/" + req.reference_window->last.iso();
      }
      break;
    }
    case CorrectionMethod::TemporalLinear:
      result = fill_temporal_linear(target, req.max_gap_days, p.user_id);
      break;
    case CorrectionMethod::External:
      result = import_external_fill(target, req.external_data, req.external_format, p.user_id);
      break;
    case CorrectionMethod::OutlierRemoval:
      throw Error(ErrorCode::InvalidArgument, "outlier-removal is not a fill method");
  }
  return result;
}

Preview Service::preview_fill(const Principal& p, const std::string& id, const FillRequest& req) {
  const auto head = series(p, id, std::nullopt, Action::Edit);
  Preview pv;
  pv.base_version = head.version;
  pv.result = compute_fill(p, head, req);
  const std::string key = p.user_id + '\n' + store_.stored_digest(id, head.version) + '\n' +
                          canonical_json(*pv.result.series.correction) + '\n' +
                          series_digest(pv.result.series);
  pv.preview_id = "pv-" + sha256_hex(key).substr(0, 32);

  std::lock_guard lock(preview_mu_);
  if (!previews_.count(pv.preview_id)) {
    preview_order_.push_back(pv.preview_id);
    if (preview_order_.size() > kPreviewCacheSize) {
      previews_.erase(preview_order_.front());
      preview_order_.pop_front();
    }
  }
  previews_[pv.preview_id] = CachedPreview{p.user_id, pv};
  return pv;
}

DailySeries Service::commit_preview(const Principal& p, const std::string& preview_id) {
  Preview pv;
  {
    std::lock_guard lock(preview_mu_);
    auto it = previews_.find(preview_id);
    if (it == previews_.end() || it->second.user_id != p.user_id) {
      throw Error(ErrorCode::StalePreview, "unknown or expired preview " + preview_id, preview_id);
    }
    pv = it->second.preview;
  }
  const auto head = series(p, pv.result.series.id, std::nullopt, Action::Edit);
  if (head.version != pv.base_version) {
    throw Error(ErrorCode::StalePreview,
                "series " + head.id + " changed since the preview (now version " + std::to_string(head.version) + ")",
                std::to_string(head.version));
  }
  try {
    auto out = commit_result(std::move(pv.result), pv.base_version);
    std::lock_guard lock(preview_mu_);
    previews_.erase(preview_id);
    return out;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::StaleWrite) throw Error(ErrorCode::StalePreview, e.what(), e.detail());
    throw;
  }
}

DailySeries Service::fill_and_commit(const Principal& p, const std::string& id, const FillRequest& req) {
  const auto head = series(p, id, std::nullopt, Action::Edit);
  return commit_result(compute_fill(p, head, req), head.version);
}

DailySeries Service::commit_result(FillResult result, int base_version) {
  if (result.filled == 0) throw Error(ErrorCode::NoOp, "the correction changes no slot");
  DailySeries next = std::move(result.series);
  const auto ts = now();
  next.correction->created_at = ts;
  store_.commit_version(next, base_version, ts);
  return next;
}

std::string Service::export_text(const Principal& p, const ExportRequest& req) const {
  req.format.validate();
  if (req.series_ids.empty()) throw Error(ErrorCode::InvalidArgument, "at least one series is required");
  if (req.aggregation) req.aggregation->validate();
  // Check every series first so a forbidden one aborts before any output.
  for (const auto& id : req.series_ids) require(p, id, Action::Download, DatasetKind::Series);
  std::string out;
  for (const auto& id : req.series_ids) {
    DailySeries s = store_.load_series(id);
    if (req.aggregation && req.aggregation->gap_policy == GapPolicy::UseFilled) {
      const auto versions = store_.load_versions(id);
      s = latest_filled_version(versions);
    }
    if (req.window) {
      auto w = intersect(*req.window, s.range());
      if (!w) throw Error(ErrorCode::OutOfRange, "window does not intersect series " + id, id);
      DailySeries cut = s;
      const auto a = index_of(s, w->first), b = index_of(s, w->last) + 1;
      cut.start = w->first;
      cut.end = w->last;
      cut.values.assign(s.values.begin() + static_cast<std::ptrdiff_t>(a), s.values.begin() + static_cast<std::ptrdiff_t>(b));
      cut.flags.assign(s.flags.begin() + static_cast<std::ptrdiff_t>(a), s.flags.begin() + static_cast<std::ptrdiff_t>(b));
      s = std::move(cut);
    }
    const auto st = store_.station(s.station_id);
    if (!out.empty()) out += '\n';
    out += export_block(s, st ? &*st : nullptr, req.format, req.aggregation);
  }
  return out;
}

std::vector<Catchment> Service::list_catchments(const Principal& p) const {
  const auto grants = store_.grants();
  std::vector<Catchment> out;
  for (auto& c : store_.catchments()) {
    auto d = store_.dataset(c.id);
    if (d && check_permission(p, d->object, Action::ViewMetadata, grants)) out.push_back(std::move(c));
  }
  return out;
}

Catchment Service::create_catchment(const Principal& p, Catchment c, const std::optional<std::string>& study_area) {
  const auto area = resolve_study_area(study_area);
  require_study_area_edit(p, area);
  if (c.id.empty()) c.id = "ca-" + random_hex(6);
  if (c.name.empty()) throw Error(ErrorCode::InvalidArgument, "catchment name must not be empty");
  c.geometry.validate();
  if (c.parent_id) {
    if (*c.parent_id == c.id) throw Error(ErrorCode::InvalidArgument, "a catchment cannot be its own parent");
    require(p, *c.parent_id, Action::ViewMetadata, DatasetKind::Catchment);
  }
  c.area_km2 = spherical_area_km2(c.geometry);
  if (!(c.area_km2 > 0)) throw Error(ErrorCode::InvalidArgument, "catchment area must be positive");
  MetadataRecord rec{c.id,
                     "Catchment " + c.name,
                     "Catchment boundary of " + c.name + ", " + shortest_double(std::round(c.area_km2 * 10) / 10) +
                         " km2",
                     {"catchment", c.name},
                     RecordType::Catchment,
                     bounding_box(c.geometry),
                     std::nullopt,
                     now()};
  store_.create_catchment(c, area, p.user_id.empty() ? "anonymous" : p.user_id, rec);
  return c;
}

Polygon Service::polygon_from_asset(const Principal& p, const std::string& asset_id, std::size_t index) const {
  const auto bytes = asset_bytes(p, asset_id);
  const auto contents = parse_shapefile_geometry(std::string_view(bytes));
  if (contents.shape_type != ShapeType::Polygon || index >= contents.polygons.size()) {
    throw Error(ErrorCode::InvalidArgument, "asset " + asset_id + " has no polygon " + std::to_string(index), asset_id);
  }
  return contents.polygons[index];
}

std::vector<std::string> Service::link_stations(const Principal& p, const std::string& catchment_id) {
  require_catchment(p, catchment_id, Action::Edit);
  const auto all = store_.catchments();
  std::vector<Catchment> subtree;
  for (const auto& c : all) {
    for (std::optional<std::string> cur = c.id; cur;) {
      if (*cur == catchment_id) {
        subtree.push_back(c);
        break;
      }
      auto it = std::find_if(all.begin(), all.end(), [&](const Catchment& x) { return x.id == *cur; });
      cur = it == all.end() ? std::nullopt : it->parent_id;
    }
  }
  std::vector<std::string> linked;
  store_.transaction([&] {
    for (const auto& st : store_.stations()) {
      auto target = deepest_containing({st.lon, st.lat}, subtree, all);
      if (!target) continue;
      // A station already linked deeper than this subtree keeps its link.
      if (st.catchment_id && *st.catchment_id != *target) {
        const bool inside_subtree = std::any_of(subtree.begin(), subtree.end(),
                                                [&](const Catchment& c) { return c.id == *st.catchment_id; });
        if (!inside_subtree && catchment_depth(*st.catchment_id, all) > catchment_depth(*target, all)) continue;
      }
      if (st.catchment_id != target) store_.set_station_catchment(st.id, target);
      linked.push_back(st.id);
    }
  });
  return linked;
}

Asset Service::register_asset(const Principal& p, std::string_view bytes, const NewAsset& meta) {
  const auto area = resolve_study_area(meta.study_area);
  require_study_area_edit(p, area);
  if (static_cast<std::int64_t>(bytes.size()) > config_.max_asset_bytes) {
    throw Error(ErrorCode::TooLarge,
                "asset of " + std::to_string(bytes.size()) + " bytes exceeds the limit of " +
                    std::to_string(config_.max_asset_bytes),
                std::to_string(config_.max_asset_bytes));
  }
  if (meta.filename.empty()) throw Error(ErrorCode::InvalidArgument, "filename must not be empty");
  Asset a;
  a.id = "as-" + random_hex(6);
  a.kind = meta.kind;
  a.filename = meta.filename;
  a.byte_size = static_cast<std::int64_t>(bytes.size());
  a.checksum = sha256_hex(bytes);
  a.bbox = meta.bbox;
  const auto ext = lower(meta.filename.size() >= 4 ? meta.filename.substr(meta.filename.size() - 4) : "");
  if (meta.kind == AssetKind::Vector && ext == ".shp") {
    const auto contents = parse_shapefile_geometry(bytes);
    if (!a.bbox) {
      std::optional<BoundingBox> box;
      auto grow = [&](const BoundingBox& b) {
        if (!box) box = b;
        box->min_lon = std::min(box->min_lon, b.min_lon);
        box->min_lat = std::min(box->min_lat, b.min_lat);
        box->max_lon = std::max(box->max_lon, b.max_lon);
        box->max_lat = std::max(box->max_lat, b.max_lat);
      };
      for (const auto& poly : contents.polygons) grow(bounding_box(poly));
      for (const auto& pt : contents.points) grow({pt.lon, pt.lat, pt.lon, pt.lat});
      a.bbox = box;
    }
  }
  const RecordType type = meta.kind == AssetKind::Vector   ? RecordType::Vector
                          : meta.kind == AssetKind::Raster ? RecordType::Raster
                                                           : RecordType::Document;
  MetadataRecord rec{a.id,
                     meta.title.empty() ? meta.filename : meta.title,
                     meta.abstract,
                     meta.keywords,
                     type,
                     a.bbox,
                     std::nullopt,
                     now()};
  store_.create_asset(a, bytes, area, p.user_id.empty() ? "anonymous" : p.user_id, rec);
  return a;
}

Asset Service::asset(const Principal& p, const std::string& id) const {
  require(p, id, Action::ViewMetadata, DatasetKind::Asset);
  return store_.asset(id).value();
}

std::string Service::asset_bytes(const Principal& p, const std::string& id) const {
  require(p, id, Action::Download, DatasetKind::Asset);
  return store_.asset_bytes(id);
}

csw::Response Service::csw(const Principal& p, const std::multimap<std::string, std::string>& params,
                           std::string_view base_url) const {
  const auto grants = store_.grants();
  std::vector<MetadataRecord> visible;
  for (auto& r : store_.metadata()) {
    auto d = store_.dataset(r.identifier);
    if (d && check_permission(p, d->object, Action::ViewMetadata, grants)) visible.push_back(std::move(r));
  }
  return csw::handle(params, visible, base_url, now());
}

}  // namespace basinfo
