#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <datetime.h>

#include <memory>

#include "basinfo/analysis.hpp"
#include "basinfo/correction.hpp"
#include "basinfo/digest.hpp"
#include "basinfo/error.hpp"
#include "basinfo/fixture.hpp"
#include "basinfo/ingest.hpp"
#include "basinfo/json_io.hpp"
#include "basinfo/service.hpp"
#include "basinfo/store.hpp"

namespace py = pybind11;
using nlohmann::json;

// datetime.date (or an ISO string) <-> basinfo::Date
namespace pybind11::detail {
template <>
struct type_caster<basinfo::Date> {
  PYBIND11_TYPE_CASTER(basinfo::Date, const_name("datetime.date"));

  bool load(handle src, bool) {
    if (!PyDateTimeAPI) PyDateTime_IMPORT;
    if (PyDate_Check(src.ptr())) {
      value = basinfo::Date::from_ymd(PyDateTime_GET_YEAR(src.ptr()), PyDateTime_GET_MONTH(src.ptr()),
                                      PyDateTime_GET_DAY(src.ptr()));
      return true;
    }
    if (PyUnicode_Check(src.ptr())) {
      value = basinfo::Date::parse_iso(src.cast<std::string>());
      return true;
    }
    return false;
  }

  static handle cast(const basinfo::Date& d, return_value_policy, handle) {
    if (!PyDateTimeAPI) PyDateTime_IMPORT;
    return PyDate_FromDate(d.year(), static_cast<int>(d.month()), static_cast<int>(d.day()));
  }
};
}  // namespace pybind11::detail

namespace {

using namespace basinfo;

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& obj) {
  if (obj.is_none()) return json::object();
  return json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

FormatSpec format_from(const py::object& spec) {
  FormatSpec f;
  if (!spec.is_none()) from_json(from_py(spec), f);
  f.validate();
  return f;
}

Variable variable_from(const std::string& name) { return Variable::parse(name); }

std::vector<const DailySeries*> pointers(const std::vector<DailySeries>& v) {
  std::vector<const DailySeries*> out;
  for (const auto& s : v) out.push_back(&s);
  return out;
}

Principal operator_principal() { return {"operator", {}, true}; }

// Owns a store plus the service facade, acting as the local operator.
class Database {
 public:
  explicit Database(const std::string& path) : store_(path), svc_(store_, config()) {}

  py::object load_fixture() {
    const auto s = fixture::load_kara(svc_, operator_principal());
    return to_py({{"series", s.series},
                  {"stations", s.stations},
                  {"catchments", s.catchments},
                  {"referenceDate", s.reference_date.iso()},
                  {"basinAreaKm2", s.basin_area_km2}});
  }
  std::vector<std::string> series_ids() const {
    std::vector<std::string> out;
    for (const auto& info : store_.series_list()) out.push_back(info.id);
    return out;
  }
  DailySeries series(const std::string& id, std::optional<int> version) const {
    return store_.load_series(id, version);
  }
  std::vector<DailySeries> versions(const std::string& id) const { return store_.load_versions(id); }
  std::string register_series(const DailySeries& s) { return svc_.register_series(operator_principal(), s); }
  DailySeries fill(const std::string& id, const py::object& request) {
    return svc_.fill_and_commit(operator_principal(), id, fill_request_from_json(from_py(request)));
  }
  py::object coverage(const std::string& catchment_id) const {
    return to_py(svc_.coverage(operator_principal(), catchment_id));
  }
  std::string export_text(const std::vector<std::string>& ids, const py::object& format) const {
    ExportRequest req;
    req.series_ids = ids;
    req.format = format_from(format);
    return svc_.export_text(operator_principal(), req);
  }
  std::string csw(const std::map<std::string, std::string>& params) const {
    std::multimap<std::string, std::string> q(params.begin(), params.end());
    return svc_.csw(operator_principal(), q, "http://localhost:8080").body;
  }
  std::vector<std::string> validate() const { return store_.validate(); }

 private:
  static ServiceConfig config() {
    ServiceConfig cfg;
    cfg.secret = random_hex(32);
    return cfg;
  }

  Store store_;
  mutable Service svc_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hydro-meteorological series management: ingest, analysis, gap filling and storage.";

  static auto* base_error = new py::exception<Error>(m, "BasinfoError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(base_error->ptr())(std::string(to_string(e.code())) + ": " + e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      exc.attr("detail") = e.detail();
      PyErr_SetObject(base_error->ptr(), exc.ptr());
    }
  });

  py::class_<DailySeries>(m, "Series")
      .def(py::init([](std::string id, std::string station_id, const std::string& variable, Date start,
                       std::vector<Slot> values) {
             return DailySeries::raw(std::move(id), std::move(station_id), variable_from(variable), start,
                                     std::move(values));
           }),
           py::arg("id"), py::arg("station_id"), py::arg("variable"), py::arg("start"), py::arg("values"))
      .def_readonly("id", &DailySeries::id)
      .def_readonly("station_id", &DailySeries::station_id)
      .def_property_readonly("variable", [](const DailySeries& s) { return std::string(s.variable.name()); })
      .def_property_readonly("unit", [](const DailySeries& s) { return std::string(s.variable.unit()); })
      .def_readonly("start", &DailySeries::start)
      .def_readonly("end", &DailySeries::end)
      .def_readonly("values", &DailySeries::values)
      .def_property_readonly("flags",
                             [](const DailySeries& s) {
                               std::vector<std::string> out;
                               for (auto f : s.flags) out.emplace_back(to_string(f));
                               return out;
                             })
      .def_readonly("version", &DailySeries::version)
      .def_readonly("parent_version", &DailySeries::parent_version)
      .def_property_readonly("correction",
                             [](const DailySeries& s) -> py::object {
                               if (!s.correction) return py::none();
                               return to_py(*s.correction);
                             })
      .def_property_readonly("digest", [](const DailySeries& s) { return series_digest(s); })
      .def("__len__", &DailySeries::size)
      .def("__eq__", [](const DailySeries& a, const DailySeries& b) { return a == b; })
      .def("__repr__", [](const DailySeries& s) {
        return "<Series " + s.id + " v" + std::to_string(s.version) + " " + s.start.iso() + ".." + s.end.iso() + ">";
      });

  m.def(
      "parse_series",
      [](const std::string& text, const py::object& format, std::string id, std::string station_id,
         const std::string& variable) {
        return parse_series(text, format_from(format), std::move(id), std::move(station_id), variable_from(variable));
      },
      py::arg("text"), py::arg("format") = py::none(), py::arg("id") = "series", py::arg("station_id") = "station",
      py::arg("variable") = "precipitation");
  m.def(
      "export_series",
      [](const DailySeries& s, const py::object& format, const py::object& aggregation) {
        std::optional<AggregationPolicy> policy;
        if (!aggregation.is_none()) policy = aggregation_policy_from_json(from_py(aggregation));
        return export_block(s, nullptr, format_from(format), policy);
      },
      py::arg("series"), py::arg("format") = py::none(), py::arg("aggregation") = py::none());
  m.def("detect_gaps", [](const DailySeries& s) { return to_py(detect_gaps(s)); });

  m.def("basic_stats", [](const DailySeries& s) { return to_py(basic_stats(s)); });
  m.def("linear_trend", [](const DailySeries& s) { return to_py(linear_trend(s)); });
  m.def("correlate", [](const DailySeries& a, const DailySeries& b) { return to_py(correlate(a, b)); });
  m.def(
      "availability",
      [](const std::vector<DailySeries>& series, Date first, Date last) {
        const auto ptrs = pointers(series);
        return to_py(availability(ptrs, DateRange{first, last}));
      },
      py::arg("series"), py::arg("first"), py::arg("last"));
  m.def(
      "overlap_period",
      [](const std::vector<DailySeries>& series, double min_fraction,
         const std::string& granularity) -> std::optional<std::pair<Date, Date>> {
        if (granularity != "day" && granularity != "month") {
          throw Error(ErrorCode::InvalidArgument, "granularity must be 'day' or 'month'", granularity);
        }
        const auto ptrs = pointers(series);
        const auto r = overlap_period(ptrs, min_fraction, granularity == "day" ? Granularity::Day : Granularity::Month);
        if (!r) return std::nullopt;
        return std::pair{r->first, r->last};
      },
      py::arg("series"), py::arg("min_fraction"), py::arg("granularity") = "day");
  m.def(
      "aggregate",
      [](const DailySeries& s, const py::object& policy) {
        return to_py(aggregate(s, aggregation_policy_from_json(from_py(policy))));
      },
      py::arg("series"), py::arg("policy"));

  m.def(
      "detect_outliers",
      [](const DailySeries& s, double threshold) {
        return to_py(detect_outliers(s, OutlierRule::for_variable(s.variable, threshold)));
      },
      py::arg("series"), py::arg("zscore_threshold") = 3.5);
  m.def(
      "fill_regression",
      [](const DailySeries& target, const std::vector<DailySeries>& neighbors, std::size_t min_pairs,
         double min_abs_r) {
        const auto ptrs = pointers(neighbors);
        return fill_regression(target, ptrs, {min_pairs, min_abs_r}, "python").series;
      },
      py::arg("target"), py::arg("neighbors"), py::arg("min_pairs") = 30, py::arg("min_abs_r") = 0.7);
  m.def(
      "fill_idw",
      [](const DailySeries& target, std::pair<double, double> target_lat_lon,
         const std::vector<std::tuple<DailySeries, double, double>>& neighbors, double power) {
        std::vector<LocatedSeries> located;
        for (const auto& [s, lat, lon] : neighbors) located.push_back({&s, lat, lon});
        return fill_idw(target, target_lat_lon.first, target_lat_lon.second, located, power, "python").series;
      },
      py::arg("target"), py::arg("location"), py::arg("neighbors"), py::arg("power") = 2.0);
  m.def(
      "fill_temporal_linear",
      [](const DailySeries& target, int max_gap_days) {
        return fill_temporal_linear(target, max_gap_days, "python").series;
      },
      py::arg("target"), py::arg("max_gap_days") = 3);
  m.def("series_digest", &series_digest);

  py::class_<Database>(m, "Database")
      .def(py::init<const std::string&>(), py::arg("path"))
      .def("load_fixture", &Database::load_fixture)
      .def("series_ids", &Database::series_ids)
      .def("series", &Database::series, py::arg("id"), py::arg("version") = py::none())
      .def("versions", &Database::versions)
      .def("register_series", &Database::register_series)
      .def("fill", &Database::fill, py::arg("id"), py::arg("request"))
      .def("coverage", &Database::coverage)
      .def("export", &Database::export_text, py::arg("ids"), py::arg("format") = py::none())
      .def("csw", &Database::csw)
      .def("validate", &Database::validate);
}
