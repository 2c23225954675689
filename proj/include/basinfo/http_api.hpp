#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <regex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "basinfo/error.hpp"
#include "basinfo/service.hpp"

namespace basinfo {

struct ApiRequest {
  std::string method;
  std::string path;
  std::multimap<std::string, std::string> query;
  std::string body;
  std::string authorization;  // raw Authorization header
  std::string base_url = "http://localhost:8080";
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

int http_status(ErrorCode code);
/// Uniform error body {code, message, detail}.
nlohmann::json error_envelope(const Error& e);

/// JSON HTTP API over a Service. `handle` is transport independent; `serve`
/// binds it to a cpp-httplib server.
class HttpApi {
 public:
  explicit HttpApi(Service& service);
  ~HttpApi();

  ApiResponse handle(const ApiRequest& req);

  struct RouteInfo {
    std::string method;
    std::string pattern;  // ECMAScript regex over the path
    bool requires_session = true;
  };
  std::vector<RouteInfo> routes() const;

  /// Blocks until stop() is called. Returns false if the socket cannot be bound.
  bool serve(const std::string& host, int port);
  /// Binds to an ephemeral port and serves on a background thread; returns the port.
  int start_background(const std::string& host = "127.0.0.1");
  void stop();

  struct Route;

 private:
  ApiResponse dispatch(const ApiRequest& req);

  Service& svc_;
  std::vector<Route> routes_;
  struct Server;
  std::unique_ptr<Server> server_;
};

}  // namespace basinfo
