#include "basinfo/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "basinfo/error.hpp"
#include "basinfo/fixture.hpp"
#include "basinfo/http_api.hpp"
#include "basinfo/json_io.hpp"
#include "basinfo/service.hpp"

namespace basinfo {
namespace {

struct Options {
  std::string data_dir = "./data";
  int port = 8080;
  std::string host = "0.0.0.0";
  std::string as_user;
  int verbosity = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot read file '" + path + "'", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path store_path(const Options& o) {
  std::filesystem::path dir(o.data_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::InvalidArgument, "data directory '" + o.data_dir + "' is not usable", o.data_dir);
  }
  return dir / "basinfo.db";
}

ServiceConfig service_config() {
  ServiceConfig cfg;
  if (const char* s = std::getenv("BASINFO_SECRET")) cfg.secret = s;
  return cfg;
}

Principal acting_principal(Store& store, const Options& o) {
  if (o.as_user.empty()) return Principal{"operator", {}, true};
  auto u = store.user_by_name(o.as_user);
  if (!u) throw Error(ErrorCode::InvalidArgument, "unknown user '" + o.as_user + "'", o.as_user);
  return Service::principal_of(*u);
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"basinfo: river-basin information system", "basinfo"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--data-dir", opt.data_dir, "Directory holding the store")->envname("BASINFO_DATA_DIR");
  app.add_option("--as", opt.as_user, "Act as this user instead of the local operator");
  app.add_flag("-v,--verbose", opt.verbosity, "Verbose output");
  app.set_config("--config", "", "Optional configuration file (INI or TOML)");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--port", opt.port, "Listening port")->envname("BASINFO_PORT");
  serve->add_option("--host", opt.host, "Listening address");

  std::string station, variable, format_file, data_file, series_id;
  auto* ingest = app.add_subcommand("ingest", "Parse a station file and register it as a new series");
  ingest->add_option("--station", station, "Station id")->required();
  ingest->add_option("--variable", variable, "precipitation | discharge | temperature | evaporation")->required();
  ingest->add_option("--format", format_file, "FormatSpec JSON file");
  ingest->add_option("--id", series_id, "Series id (generated when omitted)");
  ingest->add_option("file", data_file, "Data file")->required();

  std::vector<std::string> export_ids;
  std::string aggregation_file, output_file;
  auto* exp = app.add_subcommand("export", "Export series as delimited text");
  exp->add_option("--series", export_ids, "Series id (repeatable)")->required();
  exp->add_option("--format", format_file, "FormatSpec JSON file");
  exp->add_option("--aggregation", aggregation_file, "AggregationPolicy JSON file");
  exp->add_option("--output,-o", output_file, "Output file (stdout when omitted)");

  auto* user = app.add_subcommand("user", "User administration");
  user->require_subcommand(1);
  std::string username, password, grant_user, grant_group, object_id;
  std::vector<std::string> groups, actions;
  bool is_admin = false;
  auto* user_add = user->add_subcommand("add", "Create a user");
  user_add->add_option("username", username)->required();
  user_add->add_option("--password", password)->required();
  user_add->add_option("--group", groups, "Group membership (repeatable)");
  user_add->add_flag("--admin", is_admin);
  auto* user_grant = user->add_subcommand("grant", "Grant actions on a dataset or study area");
  auto* gu = user_grant->add_option("--user", grant_user, "Username receiving the grant");
  auto* gg = user_grant->add_option("--group", grant_group, "Group receiving the grant");
  gu->excludes(gg);
  user_grant->add_option("--object", object_id, "Dataset or study-area id")->required();
  user_grant->add_option("--action", actions, "view-metadata | view-data | download | edit | manage")->required();

  auto* fixture_cmd = app.add_subcommand("fixture", "Synthetic datasets");
  fixture_cmd->require_subcommand(1);
  auto* fixture_load = fixture_cmd->add_subcommand("load", "Load a fixture");
  std::string fixture_name;
  fixture_load->add_option("name", fixture_name, "Fixture name (kara)")->required()->check(CLI::IsMember({"kara"}));

  auto* validate = app.add_subcommand("validate", "Store integrity sweep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    Store store(store_path(opt));
    Service svc(store, service_config());
    const Principal who = acting_principal(store, opt);

    if (*serve) {
      if (std::getenv("BASINFO_SECRET") == nullptr) {
        err << "warning: BASINFO_SECRET is not set; sessions will not survive a restart\n";
      }
      HttpApi api(svc);
      out << "listening on " << opt.host << ":" << opt.port << std::endl;
      if (!api.serve(opt.host, opt.port)) {
        err << "error: cannot listen on " << opt.host << ":" << opt.port << "\n";
        return 1;
      }
      return 0;
    }
    if (*ingest) {
      const FormatSpec spec = format_file.empty() ? FormatSpec{} : parse_format_spec(read_file(format_file));
      const auto raw = read_file(data_file);
      const auto s = svc.ingest(who, raw, spec, station, Variable::parse(variable),
                                series_id.empty() ? std::nullopt : std::optional<std::string>(series_id));
      const auto gaps = detect_gaps(s);
      out << "registered " << s.id << " (" << s.start.iso() << " to " << s.end.iso() << ", " << gaps.total_missing
          << " missing of " << s.size() << ")\n";
      return 0;
    }
    if (*exp) {
      ExportRequest req;
      req.series_ids = export_ids;
      if (!format_file.empty()) req.format = parse_format_spec(read_file(format_file));
      if (!aggregation_file.empty()) {
        req.aggregation = aggregation_policy_from_json(nlohmann::json::parse(read_file(aggregation_file)));
      }
      const auto text = svc.export_text(who, req);
      if (output_file.empty()) {
        out << text;
      } else {
        std::ofstream f(output_file, std::ios::binary);
        if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write '" + output_file + "'", output_file);
        f << text;
      }
      return 0;
    }
    if (*user_add) {
      const auto u = svc.add_user(who, username, password, groups, is_admin);
      out << "created user " << u.username << " (" << u.id << ")\n";
      return 0;
    }
    if (*user_grant) {
      PermissionGrant g;
      if (!grant_group.empty()) {
        g.subject_kind = SubjectKind::Group;
        g.subject_id = grant_group;
      } else if (!grant_user.empty()) {
        auto u = store.user_by_name(grant_user);
        if (!u) throw Error(ErrorCode::InvalidArgument, "unknown user '" + grant_user + "'", grant_user);
        g.subject_id = u->id;
      } else {
        throw Error(ErrorCode::InvalidArgument, "one of --user or --group is required");
      }
      g.object_id = object_id;
      for (const auto& a : actions) g.actions.insert(parse_action(a));
      const auto saved = svc.add_grant(who, g);
      out << "granted " << nlohmann::json(saved.actions.names()).dump() << " on " << saved.object_id << " ("
          << saved.id << ")\n";
      return 0;
    }
    if (*fixture_load) {
      const auto s = fixture::load_kara(svc, who);
      out << "loaded kara fixture: " << s.series << " series, " << s.stations << " stations, " << s.catchments
          << " catchments, basin area " << s.basin_area_km2 << " km2\n";
      return 0;
    }
    if (*validate) {
      const auto problems = store.validate();
      for (const auto& p : problems) err << "problem: " << p << "\n";
      out << (problems.empty() ? "ok" : "invalid") << ": " << store.series_count() << " series\n";
      return problems.empty() ? 0 : 1;
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return e.code() == ErrorCode::Internal ? 2 : 1;
  } catch (const nlohmann::json::exception& e) {
    err << "error: invalid JSON: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
  err << app.help();
  return 1;
}

}  // namespace basinfo
