#include "basinfo/http_api.hpp"

#include <thread>

#include <httplib.h>

#include "basinfo/json_io.hpp"

namespace basinfo {

using nlohmann::json;

struct HttpApi::Route {
  std::string method;
  std::string source;
  std::regex pattern;
  bool requires_session = true;
  std::function<ApiResponse(const ApiRequest&, const std::smatch&, const Principal&)> handler;
};

struct HttpApi::Server {
  httplib::Server http;
  std::thread thread;
};

namespace {

ApiResponse ok(const json& body, int status = 200) {
  ApiResponse r;
  r.status = status;
  r.body = body.dump();
  return r;
}

json parse_body(const ApiRequest& req) {
  if (req.body.empty()) return json::object();
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed JSON body: ") + e.what());
  }
}

std::optional<std::string> query_value(const ApiRequest& req, const std::string& key) {
  auto it = req.query.find(key);
  if (it == req.query.end()) return std::nullopt;
  return it->second;
}

std::optional<int> query_int(const ApiRequest& req, const std::string& key) {
  auto v = query_value(req, key);
  if (!v) return std::nullopt;
  try {
    std::size_t pos = 0;
    const int n = std::stoi(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument(key);
    return n;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "query parameter '" + key + "' must be an integer", *v);
  }
}

std::optional<Date> query_date(const ApiRequest& req, const std::string& key) {
  auto v = query_value(req, key);
  if (!v) return std::nullopt;
  return Date::parse_iso(*v);
}

std::optional<int> body_version(const json& j) {
  if (j.contains("version") && !j["version"].is_null()) return j["version"].get<int>();
  return std::nullopt;
}

std::optional<std::string> body_string(const json& j, const char* key) {
  if (j.contains(key) && !j[key].is_null()) return j[key].get<std::string>();
  return std::nullopt;
}

json user_json(const User& u) {
  return {{"id", u.id}, {"username", u.username}, {"groups", u.groups}, {"isAdmin", u.is_admin}};
}

json grant_json(const PermissionGrant& g) {
  return {{"id", g.id},
          {"subjectKind", g.subject_kind == SubjectKind::User ? "user" : "group"},
          {"subjectId", g.subject_id},
          {"objectId", g.object_id},
          {"actions", g.actions.names()}};
}

json catchment_json(const Catchment& c) {
  return {{"id", c.id},
          {"name", c.name},
          {"parentId", c.parent_id ? json(*c.parent_id) : json()},
          {"geometry", polygon_to_json(c.geometry)},
          {"areaKm2", c.area_km2}};
}

json series_info_json(const SeriesInfo& s) {
  return {{"id", s.id},
          {"stationId", s.station_id},
          {"variable", s.variable.name()},
          {"unit", s.variable.unit()},
          {"studyArea", s.study_area},
          {"headVersion", s.head_version}};
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(',', start);
    if (end == std::string::npos) end = s.size();
    if (end > start) out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::string bearer_token(const std::string& header) {
  constexpr std::string_view prefix = "Bearer ";
  if (header.size() > prefix.size() && header.compare(0, prefix.size(), prefix) == 0) {
    return header.substr(prefix.size());
  }
  return {};
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Unauthorized:
    case ErrorCode::AuthFailed: return 401;
    case ErrorCode::Forbidden: return 403;
    case ErrorCode::NotFound:
    case ErrorCode::UnknownStation:
    case ErrorCode::UnknownSeries:
    case ErrorCode::UnknownCatchment:
    case ErrorCode::UnknownAsset: return 404;
    case ErrorCode::StalePreview:
    case ErrorCode::StaleWrite:
    case ErrorCode::Conflict: return 409;
    case ErrorCode::TooLarge: return 413;
    case ErrorCode::Internal: return 500;
    default: return 400;
  }
}

json error_envelope(const Error& e) {
  return {{"code", to_string(e.code())}, {"message", e.what()}, {"detail", e.detail()}};
}

HttpApi::HttpApi(Service& service) : svc_(service) {
  auto add = [this](std::string method, const char* pattern, bool session,
                    std::function<ApiResponse(const ApiRequest&, const std::smatch&, const Principal&)> fn) {
    routes_.push_back(Route{std::move(method), pattern, std::regex(pattern), session, std::move(fn)});
  };
  const char* id = "([A-Za-z0-9._:-]+)";
  auto path = [&](std::string a, std::string b = "") { return a + id + b; };

  add("POST", "^/api/auth/login$", false, [this](const ApiRequest& r, const std::smatch&, const Principal&) {
    const auto j = parse_body(r);
    const auto token = svc_.login(j.at("username").get<std::string>(), j.at("password").get<std::string>());
    return ok({{"token", token}});
  });
  add("POST", "^/api/auth/logout$", true, [this](const ApiRequest& r, const std::smatch&, const Principal&) {
    svc_.logout(bearer_token(r.authorization));
    return ok({{"revoked", true}});
  });

  add("GET", "^/api/stations$", true, [this](const ApiRequest&, const std::smatch&, const Principal& p) {
    return ok(json(svc_.list_stations(p)));
  });
  add("POST", "^/api/stations$", true, [this](const ApiRequest& r, const std::smatch&, const Principal& p) {
    auto j = parse_body(r);
    const auto area = body_string(j, "studyArea");
    j.erase("studyArea");
    if (!j.contains("id")) j["id"] = "";
    return ok(json(svc_.create_station(p, j.get<Station>(), area)), 201);
  });

  add("GET", "^/api/series$", true, [this](const ApiRequest&, const std::smatch&, const Principal& p) {
    json out = json::array();
    for (const auto& s : svc_.list_series(p)) out.push_back(series_info_json(s));
    return ok(out);
  });
  add("POST", "^/api/series$", true, [this](const ApiRequest& r, const std::smatch&, const Principal& p) {
    const auto j = parse_body(r);
    const FormatSpec spec = j.contains("format") ? j["format"].get<FormatSpec>() : FormatSpec{};
    const auto s = svc_.ingest(p, j.at("data").get<std::string>(), spec, j.at("stationId").get<std::string>(),
                               Variable::parse(j.at("variable").get<std::string>()), body_string(j, "id"));
    return ok(series_summary_json(s), 201);
  });
  add("GET", path("^/api/series/", "$").c_str(), true, [this](const ApiRequest&, const std::smatch& m, const Principal& p) {
    return ok(svc_.series_detail(p, m[1]));
  });
  add("GET", path("^/api/series/", "/data$").c_str(), true,
      [this](const ApiRequest& r, const std::smatch& m, const Principal& p) {
        const auto s = svc_.series(p, m[1], query_int(r, "version"));
        std::optional<DateRange> window;
        const auto from = query_date(r, "from"), to = query_date(r, "to");
        if (from || to) window = DateRange{from.value_or(s.start), to.value_or(s.end)};
        return ok(series_data_json(s, window));
      });
  add("GET", path("^/api/series/", "/stats$").c_str(), true,
      [this](const ApiRequest& r, const std::smatch& m, const Principal& p) {
        const auto s = svc_.series(p, m[1], query_int(r, "version"));
        std::optional<DateRange> window;
        const auto from = query_date(r, "from"), to = query_date(r, "to");
        if (from || to) window = DateRange{from.value_or(s.start), to.value_or(s.end)};
        json out = {{"seriesId", s.id}, {"version", s.version}, {"stats", basic_stats(s, window)}};
        try {
          out["trend"] = linear_trend(s);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::InsufficientData) throw;
          out["trend"] = nullptr;
        }
        return ok(out);
      });
  add("GET", path("^/api/series/", "/gaps$").c_str(), true,
      [this](const ApiRequest& r, const std::smatch& m, const Principal& p) {
        return ok(json(svc_.gaps(p, m[1], query_int(r, "version"))));
      });
  add("POST", path("^/api/series/", "/aggregate$").c_str(), true,
      [this](const ApiRequest& r, const std::smatch& m, const Principal& p) {
        const auto j = parse_body(r);
        const auto rows = svc_.aggregate(p, m[1], aggregation_policy_from_json(j), body_version(j));
        return ok({{"seriesId", m[1].str()}, {"rows", rows}});
      });
  add("POST", path("^/api/series/", "/outliers/detect$").c_str(), true,
      [this](const ApiRequest& r, const std::smatch& m, const Principal& p) {
        const auto j = parse_body(r);
        std::optional<double> z;
        if (j.contains("zscoreThreshold")) z = j["zscoreThreshold"].get<double>();
        return ok({{"seriesId", m[1].str()}, {"flags", svc_.detect_outliers(p, m[1], z)}});
      });
  add("POST", path("^/api/series/", "/outliers/remove$").c_str(), true,
      [this](const ApiRequest& r, const std::smatch& m, const Principal& p) {
        const auto j = parse_body(r);
        std::optional<int> base;
        if (j.contains("baseVersion")) base = j["baseVersion"].get<int>();
        const auto flags = j.at("flags").get<std::vector<OutlierFlag>>();
        return ok(series_summary_json(svc_.remove_outliers(p, m[1], flags, base)), 201);
      });
  add("POST", path("^/api/series/", "/fill$").c_str(), true,
      [this](const ApiRequest& r, const std::smatch& m, const Principal& p) {
        const auto j = parse_body(r);
        if (auto pid = body_string(j, "previewId")) {
          const auto s = svc_.commit_preview(p, *pid);
          if (s.id != m[1].str()) throw Error(ErrorCode::StalePreview, "preview belongs to another series", *pid);
          return ok(series_summary_json(s), 201);
        }
        const auto req = fill_request_from_json(j);
        if (j.value("preview", true)) {
          const auto pv = svc_.preview_fill(p, m[1], req);
          return ok({{"previewId", pv.preview_id},
                     {"baseVersion", pv.base_version},
                     {"filled", pv.result.filled},
                     {"correction", *pv.result.series.correction},
                     {"series", series_data_json(pv.result.series)}});
        }
        return ok(series_summary_json(svc_.fill_and_commit(p, m[1], req)), 201);
      });

  add("POST", "^/api/analysis/correlate$", true, [this](const ApiRequest& r, const std::smatch&, const Principal& p) {
    const auto j = parse_body(r);
    return ok(json(svc_.correlate(p, j.at("a").get<std::string>(), j.at("b").get<std::string>())));
  });
  add("POST", "^/api/analysis/availability$", true,
      [this](const ApiRequest& r, const std::smatch&, const Principal& p) {
        const auto j = parse_body(r);
        const DateRange period{j.at("from").get<Date>(), j.at("to").get<Date>()};
        return ok({{"results", svc_.availability(p, j.at("seriesIds").get<std::vector<std::string>>(), period)}});
      });
  add("POST", "^/api/analysis/overlap$", true, [this](const ApiRequest& r, const std::smatch&, const Principal& p) {
    const auto j = parse_body(r);
    const auto g = j.value("granularity", std::string("day"));
    if (g != "day" && g != "month") throw Error(ErrorCode::InvalidArgument, "granularity must be day or month", g);
    const auto period = svc_.overlap(p, j.at("seriesIds").get<std::vector<std::string>>(),
                                     j.value("minFraction", 0.0), g == "day" ? Granularity::Day : Granularity::Month);
    return ok({{"period", period ? json(*period) : json()}});
  });

  add("GET", "^/api/catchments$", true, [this](const ApiRequest&, const std::smatch&, const Principal& p) {
    json out = json::array();
    for (const auto& c : svc_.list_catchments(p)) out.push_back(catchment_json(c));
    return ok(out);
  });
  add("POST", "^/api/catchments$", true, [this](const ApiRequest& r, const std::smatch&, const Principal& p) {
    const auto j = parse_body(r);
    Catchment c;
    c.id = j.value("id", std::string());
    c.name = j.at("name").get<std::string>();
    c.parent_id = body_string(j, "parentId");
    if (j.contains("fromAsset")) {
      const auto& src = j["fromAsset"];
      c.geometry = svc_.polygon_from_asset(p, src.at("assetId").get<std::string>(), src.value("index", std::size_t{0}));
    } else {
      c.geometry = polygon_from_json(j.at("geometry"));
    }
    return ok(catchment_json(svc_.create_catchment(p, std::move(c), body_string(j, "studyArea"))), 201);
  });
  add("GET", path("^/api/catchments/", "/coverage$").c_str(), true,
      [this](const ApiRequest&, const std::smatch& m, const Principal& p) {
        return ok(json(svc_.coverage(p, m[1])));
      });
  add("POST", path("^/api/catchments/", "/link-stations$").c_str(), true,
      [this](const ApiRequest&, const std::smatch& m, const Principal& p) {
        return ok({{"catchmentId", m[1].str()}, {"linked", svc_.link_stations(p, m[1])}});
      });

  add("POST", "^/api/export$", true, [this](const ApiRequest& r, const std::smatch&, const Principal& p) {
    const auto j = parse_body(r);
    ExportRequest req;
    req.series_ids = j.at("seriesIds").get<std::vector<std::string>>();
    if (j.contains("format")) req.format = j["format"].get<FormatSpec>();
    if (j.contains("aggregation") && !j["aggregation"].is_null()) {
      req.aggregation = aggregation_policy_from_json(j["aggregation"]);
    }
    if (j.contains("from") || j.contains("to")) {
      req.window = DateRange{j.value("from", Date::from_ymd(1, 1, 1)), j.value("to", Date::from_ymd(9999, 12, 31))};
    }
    ApiResponse out;
    out.content_type = "text/plain; charset=utf-8";
    out.body = svc_.export_text(p, req);
    out.headers["Content-Disposition"] = "attachment; filename=\"export.txt\"";
    return out;
  });

  add("POST", "^/api/assets$", true, [this](const ApiRequest& r, const std::smatch&, const Principal& p) {
    NewAsset meta;
    meta.kind = parse_asset_kind(query_value(r, "kind").value_or("document"));
    meta.filename = query_value(r, "filename").value_or("");
    meta.title = query_value(r, "title").value_or("");
    meta.abstract = query_value(r, "abstract").value_or("");
    meta.keywords = split_csv(query_value(r, "keywords").value_or(""));
    meta.study_area = query_value(r, "studyArea");
    if (auto bbox = query_value(r, "bbox")) {
      const auto parts = split_csv(*bbox);
      if (parts.size() != 4) throw Error(ErrorCode::InvalidArgument, "bbox must be minLon,minLat,maxLon,maxLat");
      try {
        meta.bbox = BoundingBox{std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2]), std::stod(parts[3])};
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "bbox must contain four numbers", *bbox);
      }
    }
    return ok(json(svc_.register_asset(p, r.body, meta)), 201);
  });
  add("GET", path("^/api/assets/", "$").c_str(), true, [this](const ApiRequest&, const std::smatch& m, const Principal& p) {
    const auto a = svc_.asset(p, m[1]);
    ApiResponse out;
    out.content_type = "application/octet-stream";
    out.body = svc_.asset_bytes(p, m[1]);
    out.headers["Content-Disposition"] = "attachment; filename=\"" + a.filename + "\"";
    out.headers["X-Checksum-SHA256"] = a.checksum;
    return out;
  });
  add("GET", path("^/api/assets/", "/metadata$").c_str(), true,
      [this](const ApiRequest&, const std::smatch& m, const Principal& p) { return ok(json(svc_.asset(p, m[1]))); });

  add("GET", "^/api/admin/users$", true, [this](const ApiRequest&, const std::smatch&, const Principal& p) {
    json out = json::array();
    for (const auto& u : svc_.list_users(p)) out.push_back(user_json(u));
    return ok(out);
  });
  add("POST", "^/api/admin/users$", true, [this](const ApiRequest& r, const std::smatch&, const Principal& p) {
    const auto j = parse_body(r);
    const auto u = svc_.add_user(p, j.at("username").get<std::string>(), j.at("password").get<std::string>(),
                                 j.value("groups", std::vector<std::string>{}), j.value("isAdmin", false));
    return ok(user_json(u), 201);
  });
  add("GET", "^/api/admin/grants$", true, [this](const ApiRequest&, const std::smatch&, const Principal& p) {
    json out = json::array();
    for (const auto& g : svc_.list_grants(p)) out.push_back(grant_json(g));
    return ok(out);
  });
  add("POST", "^/api/admin/grants$", true, [this](const ApiRequest& r, const std::smatch&, const Principal& p) {
    const auto j = parse_body(r);
    PermissionGrant g;
    const auto kind = j.value("subjectKind", std::string("user"));
    if (kind != "user" && kind != "group") throw Error(ErrorCode::InvalidArgument, "subjectKind must be user or group");
    g.subject_kind = kind == "user" ? SubjectKind::User : SubjectKind::Group;
    g.subject_id = j.at("subjectId").get<std::string>();
    g.object_id = j.at("objectId").get<std::string>();
    for (const auto& a : j.at("actions")) g.actions.insert(parse_action(a.get<std::string>()));
    return ok(grant_json(svc_.add_grant(p, g)), 201);
  });

  add("GET", "^/csw$", false, [this](const ApiRequest& r, const std::smatch&, const Principal&) {
    Principal who = Principal::anonymous();
    if (!r.authorization.empty()) who = svc_.authenticate(bearer_token(r.authorization));
    const auto res = svc_.csw(who, r.query, r.base_url + "/csw");
    ApiResponse out;
    out.status = res.status;
    out.content_type = "application/xml";
    out.body = res.body;
    return out;
  });
}

HttpApi::~HttpApi() { stop(); }

std::vector<HttpApi::RouteInfo> HttpApi::routes() const {
  std::vector<RouteInfo> out;
  for (const auto& r : routes_) out.push_back({r.method, r.source, r.requires_session});
  return out;
}

ApiResponse HttpApi::handle(const ApiRequest& req) {
  try {
    return dispatch(req);
  } catch (const Error& e) {
    return ok(error_envelope(e), http_status(e.code()));
  } catch (const json::exception& e) {
    return ok(error_envelope(Error(ErrorCode::InvalidArgument, std::string("invalid request: ") + e.what())), 400);
  } catch (const std::exception& e) {
    return ok(error_envelope(Error(ErrorCode::Internal, e.what())), 500);
  }
}

ApiResponse HttpApi::dispatch(const ApiRequest& req) {
  bool path_known = false;
  for (const auto& route : routes_) {
    std::smatch m;
    if (!std::regex_match(req.path, m, route.pattern)) continue;
    path_known = true;
    if (route.method != req.method) continue;
    Principal who = Principal::anonymous();
    if (route.requires_session) {
      const auto token = bearer_token(req.authorization);
      if (token.empty()) throw Error(ErrorCode::Unauthorized, "authentication required");
      who = svc_.authenticate(token);
    }
    return route.handler(req, m, who);
  }
  if (path_known) {
    ApiResponse r = ok(error_envelope(Error(ErrorCode::InvalidArgument, "method not allowed", req.method)), 405);
    return r;
  }
  throw Error(ErrorCode::NotFound, "not found: " + req.path, req.path);
}

namespace {

void install_bridge(HttpApi& api, httplib::Server& http) {
  http.set_payload_max_length(std::size_t{600} << 20);
  auto bridge = [&api](const httplib::Request& in, httplib::Response& out) {
    ApiRequest req;
    req.method = in.method;
    req.path = in.path;
    for (const auto& [k, v] : in.params) req.query.emplace(k, v);
    req.body = in.body;
    req.authorization = in.get_header_value("Authorization");
    const auto hostname = in.get_header_value("Host");
    if (!hostname.empty()) req.base_url = "http://" + hostname;
    const auto res = api.handle(req);
    out.status = res.status;
    for (const auto& [k, v] : res.headers) out.set_header(k, v);
    out.set_content(res.body, res.content_type);
  };
  http.Get(".*", bridge);
  http.Post(".*", bridge);
  http.Put(".*", bridge);
  http.Delete(".*", bridge);
}

}  // namespace

bool HttpApi::serve(const std::string& host, int port) {
  stop();
  server_ = std::make_unique<Server>();
  install_bridge(*this, server_->http);
  return server_->http.listen(host, port);
}

int HttpApi::start_background(const std::string& host) {
  stop();
  server_ = std::make_unique<Server>();
  install_bridge(*this, server_->http);
  const int port = server_->http.bind_to_any_port(host);
  if (port <= 0) throw Error(ErrorCode::Internal, "cannot bind a listening socket");
  server_->thread = std::thread([this] { server_->http.listen_after_bind(); });
  server_->http.wait_until_ready();
  return port;
}

void HttpApi::stop() {
  if (!server_) return;
  server_->http.stop();
  if (server_->thread.joinable()) server_->thread.join();
  server_.reset();
}

}  // namespace basinfo
