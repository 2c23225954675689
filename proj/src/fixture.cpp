#include "basinfo/fixture.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "basinfo/error.hpp"

namespace basinfo::fixture {
namespace {

constexpr double kCenterLon = 1.0665;
constexpr double kCenterLat = 9.6335;
constexpr double kHalfLon = 0.5665;
constexpr double kHalfLat = 0.3835;
constexpr int kVertices = 96;

Ring wobbly_ellipse(double cx, double cy, double ax, double ay, double scale) {
  Ring r;
  for (int i = 0; i < kVertices; ++i) {
    const double t = 2 * std::numbers::pi * i / kVertices;
    const double x = cx + scale * ax * std::cos(t) * (1 + 0.06 * std::sin(3 * t));
    const double y = cy + scale * ay * std::sin(t) * (1 + 0.05 * std::cos(2 * t));
    r.push_back({x, y});
  }
  r.push_back(r.front());
  return r;
}

Polygon ellipse(double cx, double cy, double ax, double ay) { return Polygon{{wobbly_ellipse(cx, cy, ax, ay, 1.0)}}; }

double kara_scale() {
  double lo = 0.3, hi = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = (lo + hi) / 2;
    const double area = spherical_area_km2(Polygon{{wobbly_ellipse(kCenterLon, kCenterLat, kHalfLon, kHalfLat, mid)}});
    (area < kKaraAreaKm2 ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

double round_to(double v, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::round(v * scale) / scale;
}

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
  double normal(double mean, double sd) { return std::normal_distribution<double>(mean, sd)(rng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

  LonLat point_inside(const Polygon& poly) {
    const auto box = bounding_box(poly);
    for (;;) {
      LonLat p{uniform(box.min_lon, box.max_lon), uniform(box.min_lat, box.max_lat)};
      if (point_in_polygon(p, poly)) return {round_to(p.lon, 4), round_to(p.lat, 4)};
    }
  }

  std::vector<Slot> values(Variable v, Date start, Date end, double level) {
    std::vector<Slot> out;
    for (Date d = start; d <= end; ++d) {
      const double phase = 2 * std::numbers::pi * (static_cast<double>(d.month()) - 1 + (d.day() - 1) / 31.0) / 12.0;
      const double wet = std::max(0.0, std::sin(phase - 1.2));  // rainy season around August
      double x = 0;
      switch (v.code) {
        case VariableCode::Precipitation:
          x = chance(0.05 + 0.55 * wet) ? round_to(std::exponential_distribution<double>(1.0 / (6 + 10 * wet))(rng_) * level, 1) : 0.0;
          break;
        case VariableCode::Temperature:
          x = round_to(27.0 + 3.0 * std::cos(phase - 0.9) + normal(0, 1.2), 1);
          break;
        case VariableCode::Evaporation:
          x = round_to(std::max(0.0, 5.5 - 2.0 * wet + normal(0, 0.6)), 1);
          break;
        case VariableCode::Discharge:
          x = round_to(level * (2.0 + 60.0 * wet * wet) * std::exp(normal(0, 0.15)), 2);
          break;
      }
      out.push_back(x);
    }
    return out;
  }

  void punch_gaps(std::vector<Slot>& v, int count, int max_len) {
    if (v.size() < 3) return;
    for (int g = 0; g < count; ++g) {
      const int len = integer(1, max_len);
      const int at = integer(1, static_cast<int>(v.size()) - 2);
      for (int i = at; i < std::min<int>(at + len, static_cast<int>(v.size()) - 1); ++i) v[i].reset();
    }
  }

 private:
  std::mt19937_64 rng_;
};

Date ymd(int y, unsigned m, unsigned d) { return Date::from_ymd(y, m, d); }

}  // namespace

Polygon kara_polygon() {
  return Polygon{{wobbly_ellipse(kCenterLon, kCenterLat, kHalfLon, kHalfLat, kara_scale())}};
}

Summary load_kara(Service& svc, const Principal& who) {
  Store& store = svc.store();
  if (store.study_area(kStudyArea)) {
    throw Error(ErrorCode::Conflict, "the Kara fixture is already loaded", kStudyArea);
  }
  Generator gen(kKaraSeed);
  Summary summary;
  summary.reference_date = ymd(2014, 12, 31);
  const Polygon kara = kara_polygon();

  store.transaction([&] {
    store.put_study_area({kStudyArea, "Kara basin", std::string(kBasinCatchment), who.user_id.empty() ? "operator" : who.user_id});
    store.set_setting("reference_date", summary.reference_date.iso());

    const std::string area = kStudyArea;
    svc.create_catchment(who, {kParentCatchment, "Oti", std::nullopt, ellipse(kCenterLon + 0.1, kCenterLat + 0.4, 1.0, 0.9), 0},
                         area);
    summary.basin_area_km2 = svc.create_catchment(who, {kBasinCatchment, "Kara", std::string(kParentCatchment), kara, 0}, area).area_km2;
    svc.create_catchment(who, {"kara-upper", "Upper Kara", std::string(kBasinCatchment),
                               ellipse(kCenterLon - 0.18, kCenterLat + 0.05, 0.16, 0.12), 0},
                         area);
    svc.create_catchment(who, {"kara-lower", "Lower Kara", std::string(kBasinCatchment),
                               ellipse(kCenterLon + 0.2, kCenterLat - 0.08, 0.16, 0.12), 0},
                         area);
    summary.catchments = 4;

    auto station = [&](std::string id, std::string ext, std::string name, StationKind kind, LonLat at, int established,
                       std::string op) {
      Station s{std::move(id), std::move(ext), std::move(name), kind, at.lat, at.lon,
                std::round(gen.uniform(180, 520)), established, std::move(op), std::nullopt};
      svc.create_station(who, s, area);
      ++summary.stations;
      return s;
    };
    auto series = [&](const Station& st, Variable v, Date start, Date end, int gaps, int max_gap, double level) {
      auto values = gen.values(v, start, end, level);
      gen.punch_gaps(values, gaps, max_gap);
      const std::string id = st.id + "-" + std::string(v.name());
      svc.register_series(who, DailySeries::raw(id, st.id, v, start, std::move(values)));
      ++summary.series;
      return id;
    };
    const Variable precip{VariableCode::Precipitation}, temp{VariableCode::Temperature},
        evap{VariableCode::Evaporation}, flow{VariableCode::Discharge};

    // Discharge: ten gauges, all within 1954-1989; the first spans the whole period.
    for (int i = 0; i < 10; ++i) {
      char ext[16];
      std::snprintf(ext, sizeof ext, "TG-Q%02d", i + 1);
      const auto st = station("st-gauge-" + std::to_string(i + 1), ext, "Kara gauge " + std::to_string(i + 1),
                              StationKind::Gauging, gen.point_inside(kara), 1950 + i, "Direction de l'Hydraulique");
      const Date start = i == 0 ? ymd(1954, 1, 1) : ymd(gen.integer(1954, 1966), 1, 1);
      const Date end = i == 0 ? ymd(1989, 12, 31) : ymd(gen.integer(1975, 1989), 12, 31);
      series(st, flow, start, end, gen.integer(2, 10), 90, gen.uniform(0.5, 3.0));
    }

    // Synoptic stations still in operation at the reference date.
    const auto kara_st = station("st-kara", "TG-SYN-KARA", "Kara", StationKind::Climate, {1.1900, 9.5500}, 1931,
                                 "Direction de la Meteorologie Nationale");
    series(kara_st, precip, ymd(1961, 1, 1), ymd(2014, 12, 31), 6, 20, 1.0);
    series(kara_st, temp, ymd(1961, 1, 1), ymd(2014, 12, 31), 6, 20, 1.0);
    series(kara_st, evap, ymd(1961, 1, 1), ymd(1997, 12, 31), 4, 30, 1.0);
    const auto niam = station("st-niamtougou", "TG-SYN-NIAM", "Niamtougou", StationKind::Climate, {1.1000, 9.7700}, 1950,
                              "Direction de la Meteorologie Nationale");
    series(niam, precip, ymd(1961, 1, 1), ymd(2014, 12, 31), 6, 20, 1.0);
    series(niam, temp, ymd(1961, 1, 1), ymd(2014, 12, 31), 6, 20, 1.0);

    // Climate stations that are out of order.
    for (int i = 0; i < 6; ++i) {
      const auto st = station("st-climate-" + std::to_string(i + 1), "TG-CLI-" + std::to_string(i + 1),
                              "Climate post " + std::to_string(i + 1), StationKind::Climate, gen.point_inside(kara),
                              1955 + i, "Direction de la Meteorologie Nationale");
      const Date start = ymd(gen.integer(1962, 1975), 1, 1);
      const Date end = ymd(gen.integer(1985, 2005), 12, 31);
      for (const auto& v : {precip, temp, evap}) series(st, v, start, end, gen.integer(3, 12), 60, 1.0);
    }

    // Pagouda: rainfall station just outside the basin boundary, still observing.
    const double scale = kara_scale();
    LonLat pagouda{};
    for (double k = 1.0;; k += 0.002) {
      const double t = -0.35;
      pagouda = {round_to(kCenterLon + k * scale * kHalfLon * std::cos(t), 4),
                 round_to(kCenterLat + k * scale * kHalfLat * std::sin(t), 4)};
      if (!point_in_polygon(pagouda, kara) && distance_to_polygon_km(pagouda, kara) >= 4.0) break;
    }
    const auto pag = station("st-pagouda", "TG-PLU-PAGOUDA", "Pagouda", StationKind::Rainfall, pagouda, 1972,
                             "Direction de la Meteorologie Nationale");
    series(pag, precip, ymd(1975, 1, 1), ymd(2014, 12, 31), 5, 15, 1.1);

    // Six rain gauges over a shared period with distinct gap patterns.
    const Date f0 = ymd(1980, 1, 1), f1 = ymd(2010, 12, 31);
    for (int i = 0; i < 6; ++i) {
      const auto st = station("st-rain-" + std::to_string(i + 1), "TG-PLU-" + std::to_string(100 + i),
                              "Rain gauge R" + std::to_string(i + 1), StationKind::Rainfall, gen.point_inside(kara),
                              1970 + i, "Direction de la Meteorologie Nationale");
      auto values = gen.values(precip, f0, f1, gen.uniform(0.8, 1.2));
      auto blank = [&](Date a, Date b) {
        for (Date d = a; d <= b; ++d) values[static_cast<std::size_t>(d - f0)].reset();
      };
      switch (i) {
        case 0: break;
        case 1: blank(ymd(1990, 3, 1), ymd(1994, 10, 31)); break;
        case 2:
          gen.punch_gaps(values, 40, 12);
          values[static_cast<std::size_t>(ymd(1987, 8, 14) - f0)] = -99.9;
          break;
        case 3: blank(ymd(2001, 1, 1), f1 - 1); break;
        case 4: blank(f0 + 1, ymd(1988, 6, 30)); break;
        case 5:
          for (int y = 1980; y <= 2010; y += 2) blank(ymd(y, 11, 1), ymd(y + 1, 2, 28));
          break;
      }
      svc.register_series(who, DailySeries::raw(st.id + "-precipitation", st.id, precip, f0, std::move(values)));
      ++summary.series;
    }

    // Remaining rain gauges, all discontinued before the reference year.
    for (int i = 6; summary.series < 112; ++i) {
      const auto st = station("st-rain-" + std::to_string(i + 1), "TG-PLU-" + std::to_string(100 + i),
                              "Rain gauge R" + std::to_string(i + 1), StationKind::Rainfall, gen.point_inside(kara),
                              1950 + gen.integer(0, 25), "Direction de la Meteorologie Nationale");
      const int y0 = gen.integer(1955, 1985);
      const int y1 = std::min(y0 + gen.integer(8, 25), 2011);
      series(st, precip, ymd(y0, 1, 1), ymd(y1, 12, 31), gen.integer(0, 15), 45, gen.uniform(0.8, 1.2));
    }

    svc.link_stations(who, kParentCatchment);
  });
  return summary;
}

}  // namespace basinfo::fixture
