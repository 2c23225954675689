#include "basinfo/json_io.hpp"

#include "basinfo/error.hpp"

namespace basinfo {

void to_json(nlohmann::json& j, const Date& d) { j = d.iso(); }
void from_json(const nlohmann::json& j, Date& d) { d = Date::parse_iso(j.get<std::string>()); }

void to_json(nlohmann::json& j, const DateRange& r) { j = {{"from", r.first}, {"to", r.last}}; }
void from_json(const nlohmann::json& j, DateRange& r) {
  r.first = j.at("from").get<Date>();
  r.last = j.at("to").get<Date>();
}

void to_json(nlohmann::json& j, const CorrectionRecord& r) {
  j = {{"method", to_string(r.method)},
       {"parameters", r.parameters},
       {"sourceStationIds", r.source_station_ids},
       {"createdAt", r.created_at},
       {"createdBy", r.created_by}};
}

void from_json(const nlohmann::json& j, CorrectionRecord& r) {
  r.method = parse_correction_method(j.at("method").get<std::string>());
  r.parameters = j.at("parameters").get<std::map<std::string, std::string>>();
  r.source_station_ids = j.at("sourceStationIds").get<std::vector<std::string>>();
  r.created_at = j.at("createdAt").get<std::string>();
  r.created_by = j.at("createdBy").get<std::string>();
}

std::string canonical_json(const CorrectionRecord& r) { return nlohmann::json(r).dump(); }

void to_json(nlohmann::json& j, const Station& s) {
  j = {{"id", s.id},
       {"externalId", s.external_id},
       {"name", s.name},
       {"kind", to_string(s.kind)},
       {"lat", s.lat},
       {"lon", s.lon},
       {"elevation", s.elevation},
       {"established", s.established},
       {"operator", s.operator_name},
       {"catchmentId", s.catchment_id ? nlohmann::json(*s.catchment_id) : nlohmann::json()}};
}

void from_json(const nlohmann::json& j, Station& s) {
  s.id = j.at("id").get<std::string>();
  s.external_id = j.value("externalId", "");
  s.name = j.value("name", s.id);
  s.kind = parse_station_kind(j.at("kind").get<std::string>());
  s.lat = j.at("lat").get<double>();
  s.lon = j.at("lon").get<double>();
  s.elevation = j.value("elevation", 0.0);
  s.established = j.value("established", 0);
  s.operator_name = j.value("operator", "");
  if (j.contains("catchmentId") && !j["catchmentId"].is_null()) {
    s.catchment_id = j["catchmentId"].get<std::string>();
  } else {
    s.catchment_id.reset();
  }
}

void to_json(nlohmann::json& j, const GapReport& g) {
  auto gaps = nlohmann::json::array();
  for (const auto& gap : g.gaps) gaps.push_back({{"from", gap.first}, {"to", gap.last}, {"days", gap.length()}});
  j = {{"seriesId", g.series_id},
       {"gaps", std::move(gaps)},
       {"totalMissing", g.total_missing},
       {"fractionAvailable", g.fraction_available}};
}

namespace {
nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }
nlohmann::json opt(const std::optional<Date>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }
}  // namespace

void to_json(nlohmann::json& j, const BasicStats& s) {
  j = {{"sum", opt(s.sum)},   {"max", opt(s.max)},         {"mean", opt(s.mean)},
       {"min", opt(s.min)},   {"presentCount", s.present}, {"missingCount", s.missing}};
}

void to_json(nlohmann::json& j, const Trend& t) {
  j = {{"slopePerDay", t.slope_per_day}, {"slopePerYear", t.slope_per_year}, {"intercept", t.intercept}, {"n", t.n}};
}

void to_json(nlohmann::json& j, const Correlation& c) { j = {{"r", c.r}, {"n", c.n}}; }

void to_json(nlohmann::json& j, const Availability& a) {
  auto gaps = nlohmann::json::array();
  for (const auto& g : a.gaps) gaps.push_back({{"from", g.first}, {"to", g.last}});
  j = {{"seriesId", a.series_id}, {"fractionAvailable", a.fraction_available}, {"gaps", std::move(gaps)}};
}

void to_json(nlohmann::json& j, const AggregateRow& r) {
  j = {{"period", r.label},
       {"from", r.first},
       {"to", r.last},
       {"value", opt(r.value)},
       {"missingFraction", r.missing_fraction}};
}

void to_json(nlohmann::json& j, const CoverageReport& c) {
  auto vars = nlohmann::json::array();
  for (const auto& v : c.variables) {
    auto stations = nlohmann::json::array();
    for (const auto& s : v.stations) {
      stations.push_back({{"stationId", s.station_id},
                          {"kind", to_string(s.kind)},
                          {"firstObservation", opt(s.first_observation)},
                          {"lastObservation", opt(s.last_observation)},
                          {"active", s.active}});
    }
    vars.push_back({{"variable", v.variable.name()},
                    {"activeStationCount", v.active_station_count},
                    {"inactiveStationCount", v.inactive_station_count},
                    {"earliestObservation", opt(v.earliest_observation)},
                    {"latestObservation", opt(v.latest_observation)},
                    {"stations", std::move(stations)}});
  }
  nlohmann::json by_kind = nlohmann::json::object();
  for (auto k : {StationKind::Gauging, StationKind::Climate, StationKind::Rainfall}) {
    auto it = c.active_stations_by_kind.find(k);
    by_kind[std::string(to_string(k))] =
        it == c.active_stations_by_kind.end() ? nlohmann::json::array() : nlohmann::json(it->second);
  }
  j = {{"catchmentId", c.catchment_id},
       {"referenceDate", c.reference_date},
       {"variables", std::move(vars)},
       {"activeStationsByKind", std::move(by_kind)}};
}

void to_json(nlohmann::json& j, const OutlierFlag& f) {
  j = {{"date", f.date}, {"value", f.value}, {"reason", f.reason}};
}

void from_json(const nlohmann::json& j, OutlierFlag& f) {
  f.date = j.at("date").get<Date>();
  f.value = j.at("value").get<double>();
  f.reason = j.value("reason", "");
}

void to_json(nlohmann::json& j, const BoundingBox& b) {
  j = {{"minLon", b.min_lon}, {"minLat", b.min_lat}, {"maxLon", b.max_lon}, {"maxLat", b.max_lat}};
}

void from_json(const nlohmann::json& j, BoundingBox& b) {
  b.min_lon = j.at("minLon").get<double>();
  b.min_lat = j.at("minLat").get<double>();
  b.max_lon = j.at("maxLon").get<double>();
  b.max_lat = j.at("maxLat").get<double>();
}

void to_json(nlohmann::json& j, const MetadataRecord& r) {
  j = {{"identifier", r.identifier},
       {"title", r.title},
       {"abstract", r.abstract},
       {"keywords", r.keywords},
       {"type", to_string(r.type)},
       {"bbox", r.bbox ? nlohmann::json(*r.bbox) : nlohmann::json()},
       {"temporal", r.temporal ? nlohmann::json(*r.temporal) : nlohmann::json()},
       {"modified", r.modified}};
}

void from_json(const nlohmann::json& j, MetadataRecord& r) {
  r.identifier = j.value("identifier", "");
  r.title = j.value("title", "");
  r.abstract = j.value("abstract", "");
  r.keywords = j.value("keywords", std::vector<std::string>{});
  auto type = parse_record_type(j.value("type", "series"));
  if (!type) throw Error(ErrorCode::InvalidArgument, "unknown record type");
  r.type = *type;
  if (j.contains("bbox") && !j["bbox"].is_null()) r.bbox = j["bbox"].get<BoundingBox>();
  if (j.contains("temporal") && !j["temporal"].is_null()) r.temporal = j["temporal"].get<DateRange>();
  r.modified = j.value("modified", "");
}

void to_json(nlohmann::json& j, const Asset& a) {
  j = {{"id", a.id},
       {"kind", to_string(a.kind)},
       {"filename", a.filename},
       {"byteSize", a.byte_size},
       {"checksum", a.checksum},
       {"bbox", a.bbox ? nlohmann::json(*a.bbox) : nlohmann::json()},
       {"crs", a.crs}};
}

void from_json(const nlohmann::json& j, Asset& a) {
  a.id = j.at("id").get<std::string>();
  a.kind = parse_asset_kind(j.at("kind").get<std::string>());
  a.filename = j.value("filename", "");
  a.byte_size = j.value("byteSize", std::int64_t{0});
  a.checksum = j.value("checksum", "");
  if (j.contains("bbox") && !j["bbox"].is_null()) a.bbox = j["bbox"].get<BoundingBox>();
  a.crs = j.value("crs", "EPSG:4326");
}

AggregationPolicy aggregation_policy_from_json(const nlohmann::json& j) {
  AggregationPolicy p;
  const auto step = j.value("step", "monthly");
  if (step == "monthly") p.step = AggregationStep::Monthly;
  else if (step == "yearly") p.step = AggregationStep::Yearly;
  else if (step == "hydro-year") p.step = AggregationStep::HydroYear;
  else throw Error(ErrorCode::InvalidArgument, "unknown aggregation step '" + step + "'", step);
  const auto policy = j.value("gapPolicy", "strict");
  if (policy == "strict") p.gap_policy = GapPolicy::Strict;
  else if (policy == "tolerant") p.gap_policy = GapPolicy::Tolerant;
  else if (policy == "use-filled") p.gap_policy = GapPolicy::UseFilled;
  else throw Error(ErrorCode::InvalidArgument, "unknown gap policy '" + policy + "'", policy);
  p.max_missing_fraction = j.value("maxMissingFraction", 0.0);
  p.hydro_start_month = j.value("hydroStartMonth", 4u);
  p.validate();
  return p;
}

nlohmann::json series_summary_json(const DailySeries& s) {
  return {{"id", s.id},
          {"stationId", s.station_id},
          {"variable", s.variable.name()},
          {"unit", s.variable.unit()},
          {"start", s.start},
          {"end", s.end},
          {"version", s.version},
          {"parentVersion", s.parent_version ? nlohmann::json(*s.parent_version) : nlohmann::json()},
          {"correction", s.correction ? nlohmann::json(*s.correction) : nlohmann::json()}};
}

nlohmann::json series_data_json(const DailySeries& s, std::optional<DateRange> window) {
  std::size_t lo = 0, hi = s.size();
  if (window) {
    auto clipped = intersect(*window, s.range());
    if (!clipped) {
      lo = hi = 0;
    } else {
      lo = index_of(s, clipped->first);
      hi = index_of(s, clipped->last) + 1;
    }
  }
  auto values = nlohmann::json::array();
  auto flags = nlohmann::json::array();
  for (std::size_t i = lo; i < hi; ++i) {
    values.push_back(s.values[i] ? nlohmann::json(*s.values[i]) : nlohmann::json());
    flags.push_back(to_string(s.flags[i]));
  }
  auto out = series_summary_json(s);
  out["from"] = lo < hi ? nlohmann::json(s.date_at(lo)) : nlohmann::json();
  out["to"] = lo < hi ? nlohmann::json(s.date_at(hi - 1)) : nlohmann::json();
  out["values"] = std::move(values);
  out["flags"] = std::move(flags);
  return out;
}

}  // namespace basinfo
