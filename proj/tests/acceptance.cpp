// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <csignal>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <regex>
#include <set>
#include <thread>

#include "basinfo/correction.hpp"
#include "basinfo/digest.hpp"
#include "basinfo/error.hpp"
#include "basinfo/fixture.hpp"
#include "basinfo/http_api.hpp"
#include "basinfo/json_io.hpp"
#include "support.hpp"
#include "world.hpp"

using namespace basinfo;
using nlohmann::json;
using support::ymd;

namespace {

using Seconds = std::chrono::duration<double>;

struct Tally {
  std::size_t checks = 0;
  std::vector<std::string> failures;

  bool expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok && failures.size() < 8) failures.push_back(what);
    if (!ok && failures.size() == 8) failures.push_back("...");
    return ok;
  }
  bool ok() const { return failures.empty(); }
  std::string summary() const {
    if (failures.empty()) return std::to_string(checks) + " checks";
    std::string out = std::to_string(failures.size()) + " failures of " + std::to_string(checks) + ": ";
    for (std::size_t i = 0; i < failures.size(); ++i) out += (i ? "; " : "") + failures[i];
    return out;
  }
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome from(const Tally& t, const std::string& extra = "") {
  return {t.ok(), t.summary() + (extra.empty() ? "" : ", " + extra)};
}

std::string fmt(double v, int digits = 2) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

bool rel_close(double x, double ref, double tol = 1e-9) {
  return std::fabs(x - ref) <= tol * std::fabs(ref) || (ref == 0 && std::fabs(x) < 1e-300);
}

ServiceConfig quick_config() {
  ServiceConfig cfg;
  cfg.secret = "acceptance";
  cfg.password_iterations = 1000;
  return cfg;
}

std::optional<std::string> error_code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return std::string(to_string(e.code()));
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

Outcome fixture_fidelity() {
  support::TempDir dir;
  Store store(dir / "basinfo.db");
  Service svc(store, quick_config());
  const Principal op{"operator", {}, true};
  const auto t0 = std::chrono::steady_clock::now();
  const auto summary = fixture::load_kara(svc, op);
  const double secs = Seconds(std::chrono::steady_clock::now() - t0).count();

  Tally t;
  t.expect(store.series_count() == 112, "series count " + std::to_string(store.series_count()));
  std::optional<Date> first, last;
  for (const auto& info : store.series_list()) {
    if (info.variable.code != VariableCode::Discharge) continue;
    const auto s = store.load_series(info.id);
    if (!first || s.start < *first) first = s.start;
    if (!last || s.end > *last) last = s.end;
  }
  t.expect(first == ymd(1954, 1, 1) && last == ymd(1989, 12, 31),
           "discharge extent " + (first ? first->iso() : "?") + ".." + (last ? last->iso() : "?"));

  const auto cov = svc.coverage(op, fixture::kBasinCatchment);
  for (const auto& v : cov.variables) {
    if (v.variable.code == VariableCode::Discharge) {
      t.expect(v.active_station_count == 0, "active discharge stations " + std::to_string(v.active_station_count));
    }
  }
  auto active = [&](StationKind k) {
    auto it = cov.active_stations_by_kind.find(k);
    return it == cov.active_stations_by_kind.end() ? std::vector<std::string>{} : it->second;
  };
  t.expect(active(StationKind::Climate) == std::vector<std::string>{"st-kara", "st-niamtougou"},
           "active climate stations");
  t.expect(active(StationKind::Rainfall) == std::vector<std::string>{"st-pagouda"}, "active rainfall stations");
  t.expect(active(StationKind::Gauging).empty(), "no active gauging station");
  for (const auto& v : cov.variables) {
    for (const auto& span : v.stations) {
      if (span.active) {
        const bool expected = span.station_id == "st-kara" || span.station_id == "st-niamtougou" ||
                              span.station_id == "st-pagouda";
        t.expect(expected, "unexpected active station " + span.station_id);
      }
    }
  }

  const double area = spherical_area_km2(fixture::kara_polygon());
  const double stored_area = store.catchment(fixture::kBasinCatchment)->area_km2;
  t.expect(std::fabs(area - fixture::kKaraAreaKm2) <= 0.02 * fixture::kKaraAreaKm2, "area " + fmt(area));
  t.expect(stored_area == area && summary.basin_area_km2 == area, "stored area differs from polygon area");
  t.expect(secs < 10.0, "load took " + fmt(secs) + " s");
  t.expect(store.validate().empty(), "store validation");
  return from(t, "112 series, discharge " + (first ? first->iso() : "?") + ".." + (last ? last->iso() : "?") +
                     ", area " + fmt(area, 1) + " km2, load " + fmt(secs) + " s");
}

// ---------------------------------------------------------------------------

DailySeries random_observations(std::mt19937_64& rng, const std::string& id) {
  std::uniform_int_distribution<int> var_pick(0, 3), decimals(0, 4), len_pick(1, 2000);
  std::uniform_int_distribution<std::int64_t> start_pick(Date::from_ymd(1900, 1, 1).serial(),
                                                         Date::from_ymd(2030, 1, 1).serial());
  std::uniform_real_distribution<double> u(0, 1);
  const Variable v{static_cast<VariableCode>(var_pick(rng))};
  const double lo = v.code == VariableCode::Temperature ? -15 : 0;
  const double hi = v.code == VariableCode::Discharge ? 5000 : v.code == VariableCode::Temperature ? 45 : 250;
  const int d = decimals(rng);
  const double scale = std::pow(10.0, d);
  const double missing_rate = u(rng) * 0.5;
  const int n = len_pick(rng) < 40 ? len_pick(rng) % 5 + 1 : len_pick(rng);
  std::vector<Slot> values;
  bool gap = false;
  for (int i = 0; i < n; ++i) {
    gap = gap ? u(rng) < 0.8 : u(rng) < missing_rate * 0.2;
    if (gap) {
      values.push_back(std::nullopt);
    } else if (v.code == VariableCode::Precipitation && u(rng) < 0.5) {
      values.push_back(0.0);
    } else {
      values.push_back(std::round((lo + (hi - lo) * u(rng)) * scale) / scale);
    }
  }
  return DailySeries::raw(id, "st-rt", v, Date::from_serial(start_pick(rng)), std::move(values));
}

Outcome round_trip() {
  std::vector<FormatSpec> specs(5);
  specs[1].delimiter = ';';
  specs[1].decimal_separator = ',';
  specs[1].date_format = "DD/MM/YYYY";
  specs[1].missing_codes = {"NA"};
  specs[2].delimiter = ',';
  specs[2].date_column = 1;
  specs[2].value_column = 0;
  specs[2].header_lines = 3;
  specs[2].date_format = "YYYY/MM/DD";
  specs[3].delimiter = '|';
  specs[3].date_format = "MM-DD-YYYY";
  specs[3].missing_codes = {"-9999", "NA"};
  specs[4].date_format = "DD.MM.YYYY";
  specs[4].decimal_separator = ',';
  specs[4].missing_codes = {"M", "-9999"};
  specs[4].header_lines = 1;

  std::mt19937_64 rng(20240601);
  Tally t;
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t slots = 0;
  for (int k = 0; k < 200; ++k) {
    const auto s = random_observations(rng, "rt-" + std::to_string(k));
    slots += s.size();
    for (std::size_t f = 0; f < specs.size(); ++f) {
      const std::string where = "series " + std::to_string(k) + " spec " + std::to_string(f);
      try {
        const auto text = export_block(s, nullptr, specs[f], std::nullopt);
        const auto back = parse_series(text, specs[f], s.id, s.station_id, s.variable);
        t.expect(back.start == s.start && back.end == s.end, where + ": range");
        bool same = back.values.size() == s.values.size();
        for (std::size_t i = 0; same && i < s.size(); ++i) {
          same = back.values[i].has_value() == s.values[i].has_value() && (!s.values[i] || *back.values[i] == *s.values[i]);
        }
        t.expect(same, where + ": values or gap mask differ");
      } catch (const Error& e) {
        t.expect(false, where + ": " + e.what());
      }
    }
  }
  const double secs = Seconds(std::chrono::steady_clock::now() - t0).count();
  t.expect(secs < 30.0, "took " + fmt(secs) + " s");
  return from(t, "200 series x 5 formats, " + std::to_string(slots) + " slots, " + fmt(secs) + " s");
}

// ---------------------------------------------------------------------------

std::vector<Gap> oracle_gaps(const DailySeries& s, DateRange period) {
  std::vector<Gap> out;
  for (Date d = period.first; d <= period.last; ++d) {
    const bool present = d >= s.start && d <= s.end && s.values[static_cast<std::size_t>(d - s.start)];
    if (present) continue;
    if (!out.empty() && out.back().last + 1 == d) {
      out.back().last = d;
    } else {
      out.push_back({d, d});
    }
  }
  return out;
}

std::optional<DateRange> oracle_overlap_days(const std::vector<const DailySeries*>& series, std::int64_t num,
                                             std::int64_t den) {
  Date lo = series[0]->start, hi = series[0]->end;
  for (const auto* s : series) lo = std::max(lo, s->start), hi = std::min(hi, s->end);
  if (lo > hi) return std::nullopt;
  const std::int64_t n = hi - lo + 1;
  for (std::int64_t len = n; len >= 1; --len) {
    for (std::int64_t off = 0; off + len <= n; ++off) {
      bool ok = true;
      for (const auto* s : series) {
        std::int64_t present = 0;
        for (std::int64_t i = 0; i < len; ++i) {
          present += s->values[static_cast<std::size_t>(lo + off + i - s->start)] ? 1 : 0;
        }
        if (present * den < num * len) {
          ok = false;
          break;
        }
      }
      if (ok) return DateRange{lo + off, lo + off + len - 1};
    }
  }
  return std::nullopt;
}

Outcome analytics() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> len(60, 1500), shift(-200, 200), small_len(20, 160), small_shift(-30, 30);
  std::uniform_real_distribution<double> rate(0.0, 0.6);
  const std::pair<std::int64_t, std::int64_t> fractions[] = {{1, 2}, {3, 4}, {4, 5}, {9, 10}, {1, 1}, {0, 1}};
  Tally t;
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t overlaps_found = 0;
  for (int k = 0; k < 500; ++k) {
    const std::string c = "case " + std::to_string(k);
    const Date base = ymd(1960, 1, 1) + static_cast<std::int64_t>(rng() % 15000);
    const int decimals = static_cast<int>(rng() % 4);
    const auto a = support::random_series(rng, "a", Variable{}, base, len(rng), rate(rng), decimals, 0, 120);
    const auto b = support::random_series(rng, "b", Variable{}, base + shift(rng), len(rng), rate(rng), decimals, 0, 120);

    std::size_t n = 0;
    const auto r_ref = support::pearson(a, b, &n);
    if (r_ref) {
      const auto r = correlate(a, b);
      t.expect(rel_close(r.r, *r_ref) && r.n == static_cast<std::int64_t>(n), c + ": pearson");
    } else {
      t.expect(error_code_of([&] { correlate(a, b); }).has_value(), c + ": pearson should fail");
    }

    if (const auto ols = support::ols(a)) {
      const auto tr = linear_trend(a);
      t.expect(rel_close(tr.slope_per_day, ols->first), c + ": trend slope " + shortest_double(tr.slope_per_day) +
                                                           " vs " + shortest_double(ols->first));
      t.expect(rel_close(tr.intercept, ols->second), c + ": trend intercept");
    }

    const DateRange period{base + shift(rng), base + shift(rng) + len(rng)};
    if (period.first <= period.last) {
      const DailySeries* both[] = {&a, &b};
      const auto av = availability(both, period);
      for (std::size_t i = 0; i < 2; ++i) {
        const auto& s = i ? b : a;
        t.expect(rel_close(av[i].fraction_available, support::availability_fraction(s, period.first, period.last)),
                 c + ": availability fraction");
        t.expect(av[i].gaps == oracle_gaps(s, period), c + ": availability gaps");
      }
    }

    const auto [num, den] = fractions[rng() % std::size(fractions)];
    const double f = static_cast<double>(num) / static_cast<double>(den);
    std::vector<const DailySeries*> group{&a, &b};
    DailySeries extra;
    if (rng() % 3 == 0) {
      extra = support::random_series(rng, "c", Variable{}, base + shift(rng), len(rng), rate(rng) / 2);
      group.push_back(&extra);
    }
    const auto got_m = overlap_period(group, f, Granularity::Month);
    const auto ref_m = support::overlap_months(group, num, den);
    t.expect(got_m.has_value() == ref_m.has_value() &&
                 (!got_m || (got_m->first == ref_m->first && got_m->last == ref_m->last)),
             c + ": month overlap");
    overlaps_found += got_m.has_value();

    const auto sa = support::random_series(rng, "sa", Variable{}, base, small_len(rng), rate(rng));
    const auto sb = support::random_series(rng, "sb", Variable{}, base + small_shift(rng), small_len(rng), rate(rng));
    const std::vector<const DailySeries*> pair{&sa, &sb};
    const auto got_d = overlap_period(pair, f, Granularity::Day);
    const auto ref_d = oracle_overlap_days(pair, num, den);
    t.expect(got_d == ref_d, c + ": day overlap");
  }
  const double secs = Seconds(std::chrono::steady_clock::now() - t0).count();
  t.expect(secs < 30.0, "took " + fmt(secs) + " s");
  return from(t, "500 cases, " + std::to_string(overlaps_found) + " non-empty month overlaps, " + fmt(secs) + " s");
}

// ---------------------------------------------------------------------------

Outcome aggregation() {
  std::mt19937_64 rng(3141);
  std::uniform_real_distribution<double> u(0, 1);
  Tally t;
  const Variable precip{VariableCode::Precipitation};
  const AggregationPolicy monthly{AggregationStep::Monthly, GapPolicy::Strict};
  const AggregationPolicy yearly{AggregationStep::Yearly, GapPolicy::Strict};
  const AggregationPolicy hydro{AggregationStep::HydroYear, GapPolicy::Strict};

  // Gap-free years recomposed from monthly sums.
  for (int k = 0; k < 100; ++k) {
    const int year = 1950 + static_cast<int>(rng() % 71);
    const bool dyadic = k % 2 == 0;
    std::vector<Slot> values;
    std::int64_t tenths_total = 0;
    for (Date d = ymd(year, 1, 1); d <= ymd(year, 12, 31); ++d) {
      if (u(rng) < 0.6) {
        values.push_back(0.0);
      } else if (dyadic) {
        values.push_back(std::floor(u(rng) * 600) * 0.25);
      } else {
        const auto tenths = static_cast<std::int64_t>(u(rng) * 1500);
        tenths_total += tenths;
        values.push_back(static_cast<double>(tenths) / 10);
      }
    }
    const auto s = DailySeries::raw("y", "st", precip, ymd(year, 1, 1), values);
    const auto months = aggregate(s, monthly);
    const auto years = aggregate(s, yearly);
    const std::string c = "year " + std::to_string(year) + (dyadic ? " (0.25 mm)" : " (0.1 mm)");
    if (!t.expect(months.size() == 12 && years.size() == 1 && years[0].value, c + ": shape")) continue;
    double recomposed = 0;
    bool all_present = true;
    for (const auto& m : months) {
      all_present = all_present && m.value.has_value();
      if (m.value) recomposed += *m.value;
    }
    t.expect(all_present, c + ": month missing in a gap-free year");
    if (dyadic) {
      t.expect(recomposed == *years[0].value, c + ": sum of months " + shortest_double(recomposed) + " != year " +
                                                  shortest_double(*years[0].value));
    } else {
      t.expect(std::llround(recomposed * 10) == tenths_total && std::llround(*years[0].value * 10) == tenths_total,
               c + ": sums differ at 0.1 mm");
    }
  }

  // Hydrological years recomposed from April-March months.
  for (int k = 0; k < 20; ++k) {
    const int year = 1960 + k;
    std::vector<Slot> values;
    for (Date d = ymd(year, 4, 1); d <= ymd(year + 1, 3, 31); ++d) values.push_back(std::floor(u(rng) * 400) * 0.5);
    const auto s = DailySeries::raw("h", "st", precip, ymd(year, 4, 1), values);
    const auto months = aggregate(s, monthly);
    const auto hy = aggregate(s, hydro);
    if (!t.expect(months.size() == 12 && hy.size() == 1 && hy[0].value, "hydro year shape")) continue;
    double sum = 0;
    for (const auto& m : months) sum += m.value.value_or(std::nan(""));
    t.expect(sum == *hy[0].value, "hydro year " + std::to_string(year) + " recomposition");
  }

  // Strict policy: a period is missing iff one of its days is missing.
  std::size_t periods = 0, missing_periods = 0;
  for (int k = 0; k < 200; ++k) {
    const Date start = ymd(1970, 1, 1) + static_cast<std::int64_t>(rng() % 15000);
    const int n = 300 + static_cast<int>(rng() % 900);
    const double density = k % 4 == 0 ? 0.0005 : u(rng) * 0.01;
    std::vector<Slot> values;
    for (int i = 0; i < n; ++i) values.push_back(u(rng) < density ? Slot{} : Slot{std::floor(u(rng) * 40) * 0.5});
    const auto s = DailySeries::raw("m", "st", precip, start, values);
    for (const auto* policy : {&monthly, &yearly, &hydro}) {
      const auto rows = aggregate(s, *policy);
      const std::string c = "mask " + std::to_string(k);
      if (!t.expect(!rows.empty() && rows.front().first <= s.start && rows.back().last >= s.end, c + ": coverage")) {
        continue;
      }
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (i) t.expect(rows[i - 1].last + 1 == row.first, c + ": periods not contiguous");
        bool any_missing = false;
        double sum = 0;
        for (Date d = row.first; d <= row.last; ++d) {
          const bool inside = d >= s.start && d <= s.end;
          const Slot v = inside ? s.values[static_cast<std::size_t>(d - s.start)] : Slot{};
          if (!v) any_missing = true;
          else sum += *v;
        }
        ++periods;
        missing_periods += any_missing;
        t.expect(row.value.has_value() == !any_missing, c + ": " + row.label + " strict flag");
        if (row.value && !any_missing) t.expect(*row.value == sum, c + ": " + row.label + " sum");
      }
    }
  }
  return from(t, "100 gap-free years, 20 hydro years, 200 masks over " + std::to_string(periods) + " periods (" +
                     std::to_string(missing_periods) + " missing)");
}

// ---------------------------------------------------------------------------

DailySeries with_station(DailySeries s, const std::string& station) {
  s.station_id = station;
  return s;
}

Outcome fills() {
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> u(0, 1);
  Tally t;
  const Variable precip{VariableCode::Precipitation};

  // Exact linear relations.
  for (int k = 0; k < 100; ++k) {
    const bool multi = k % 2 == 1;
    const int m = multi ? 2 + k % 3 : 1;
    const int n = 200 + static_cast<int>(rng() % 400);
    std::vector<double> coef{u(rng) * 5};
    for (int j = 0; j < m; ++j) coef.push_back(0.2 + u(rng) * 2.8);
    std::vector<std::vector<Slot>> xs(static_cast<std::size_t>(m));
    std::vector<Slot> y;
    for (int i = 0; i < n; ++i) {
      double yi = coef[0];
      bool any_missing = false;
      for (int j = 0; j < m; ++j) {
        const double x = std::round(u(rng) * 10000) / 100;
        const bool miss = u(rng) < 0.05;
        xs[static_cast<std::size_t>(j)].push_back(miss ? Slot{} : Slot{x});
        any_missing = any_missing || miss;
        yi += coef[static_cast<std::size_t>(j) + 1] * x;
      }
      y.push_back(u(rng) < 0.2 ? Slot{} : Slot{yi});
      (void)any_missing;
    }
    std::vector<DailySeries> nbs;
    for (int j = 0; j < m; ++j) {
      nbs.push_back(DailySeries::raw("x" + std::to_string(j), "st-x" + std::to_string(j), precip, ymd(2000, 1, 1),
                                     xs[static_cast<std::size_t>(j)]));
    }
    std::vector<const DailySeries*> ptrs;
    for (const auto& nb : nbs) ptrs.push_back(&nb);
    const auto target = DailySeries::raw("y", "st-y", precip, ymd(2000, 1, 1), y);
    const auto r = fill_regression(target, ptrs, {30, 0.0}, "acceptance");
    std::size_t filled = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i]) continue;
      bool all = true;
      double expect = coef[0];
      for (int j = 0; j < m; ++j) {
        const auto& x = xs[static_cast<std::size_t>(j)][i];
        all = all && x.has_value();
        if (x) expect += coef[static_cast<std::size_t>(j) + 1] * *x;
      }
      if (!all) {
        t.expect(!r.series.values[i], "regression filled a slot without predictors");
        continue;
      }
      ++filled;
      t.expect(r.series.values[i] && rel_close(*r.series.values[i], expect),
               "regression case " + std::to_string(k) + " slot " + std::to_string(i));
    }
    t.expect(r.filled == filled, "regression fill count");
  }

  // IDW with two equidistant mirrored neighbours.
  for (int k = 0; k < 200; ++k) {
    const double lat = std::round((u(rng) * 20 - 10) * 64) / 64;
    const double lon = std::round((u(rng) * 20 - 10) * 64) / 64;
    const double off = (1 + static_cast<double>(rng() % 40)) / 64;
    const bool mirror_lon = k % 2 == 0;
    const double p = 1.0 + static_cast<double>(rng() % 3);
    std::vector<Slot> tv, av, bv;
    for (int i = 0; i < 50; ++i) {
      tv.push_back(u(rng) < 0.3 ? Slot{} : Slot{std::round(u(rng) * 1000) / 10});
      av.push_back(std::round(u(rng) * 1000) / 10);
      bv.push_back(std::round(u(rng) * 1000) / 10);
    }
    const auto ts = DailySeries::raw("t", "st-t", precip, ymd(2000, 1, 1), tv);
    const auto as = DailySeries::raw("a", "st-a", precip, ymd(2000, 1, 1), av);
    const auto bs = DailySeries::raw("b", "st-b", precip, ymd(2000, 1, 1), bv);
    const LocatedSeries na{&as, mirror_lon ? lat : lat + off, mirror_lon ? lon + off : lon};
    const LocatedSeries nb{&bs, mirror_lon ? lat : lat - off, mirror_lon ? lon - off : lon};
    const LocatedSeries ab[] = {na, nb}, ba[] = {nb, na};
    const auto r1 = fill_idw(ts, lat, lon, ab, p, "acceptance");
    const auto r2 = fill_idw(ts, lat, lon, ba, p, "acceptance");
    t.expect(r1.series.values == r2.series.values, "IDW case " + std::to_string(k) + ": order changes result");
    for (std::size_t i = 0; i < tv.size(); ++i) {
      if (tv[i]) continue;
      t.expect(r1.series.values[i] == (av[i].value() + bv[i].value()) / 2,
               "IDW case " + std::to_string(k) + ": not the exact mean");
    }
    // Swapping two arbitrary neighbours is also exact.
    const LocatedSeries far{&bs, lat + 3 * off, lon - off};
    const LocatedSeries x1[] = {na, far}, x2[] = {far, na};
    t.expect(fill_idw(ts, lat, lon, x1, p, "a").series.values == fill_idw(ts, lat, lon, x2, p, "a").series.values,
             "IDW asymmetric swap");
  }

  // Temporal-linear progressions for gap lengths 1..5.
  for (int len = 1; len <= 5; ++len) {
    for (int k = 0; k < 100; ++k) {
      const double a = std::round((u(rng) * 40 - 10) * 8) / 8;
      const double step = std::round((u(rng) * 6 - 3) * 8) / 8;
      const double b = a + step * (len + 1);
      std::vector<Slot> v{a};
      for (int i = 0; i < len; ++i) v.push_back(std::nullopt);
      v.push_back(b);
      const auto tgt = DailySeries::raw("t", "st-t", Variable{VariableCode::Temperature}, ymd(2000, 1, 1), v);
      const auto r = fill_temporal_linear(tgt, 5, "acceptance");
      bool exact = r.filled == static_cast<std::size_t>(len);
      for (int i = 1; exact && i <= len + 1; ++i) {
        const auto& cur = r.series.values[static_cast<std::size_t>(i)];
        const auto& prev = r.series.values[static_cast<std::size_t>(i - 1)];
        exact = cur && prev && *cur == a + step * i && *cur - *prev == step;
      }
      t.expect(exact, "temporal-linear length " + std::to_string(len) + " case " + std::to_string(k));
    }
  }

  // Observed slots are never altered, whatever the method.
  std::size_t observed = 0;
  for (int k = 0; observed < 10000 || k < 12; ++k) {
    const auto tgt = with_station(support::random_series(rng, "t", precip, ymd(2000, 1, 1), 700, 0.4, 1, 0, 80), "st-t");
    auto nb1 = with_station(support::random_series(rng, "n1", precip, ymd(2000, 1, 1), 700, 0.05, 1, 0, 80), "st-n1");
    const auto nb2 = with_station(support::random_series(rng, "n2", precip, ymd(2000, 1, 1), 700, 0.05, 1, 0, 80), "st-n2");
    for (std::size_t i = 0; i < nb1.size(); ++i) {
      if (nb1.values[i] && tgt.values[i]) nb1.values[i] = *tgt.values[i] * 0.9 + 1.0;
    }
    std::vector<FillResult> results;
    const DailySeries* one[] = {&nb1};
    const DailySeries* two[] = {&nb1, &nb2};
    results.push_back(fill_regression(tgt, one, {30, 0.7}, "a"));
    results.push_back(fill_regression(tgt, two, {30, 0.0}, "a"));
    const LocatedSeries located[] = {{&nb1, 9.5, 1.2}, {&nb2, 9.6, 1.1}};
    results.push_back(fill_idw(tgt, 9.55, 1.15, located, 2.0, "a"));
    const double means[] = {40.0, 41.0};
    results.push_back(fill_normal_ratio(tgt, 39.0, two, means, "a"));
    results.push_back(fill_temporal_linear(tgt, 5, "a"));
    std::string external;
    for (std::size_t i = 0; i < tgt.size(); ++i) {
      if (!tgt.values[i] && u(rng) < 0.5) external += tgt.date_at(i).iso() + "\t" + std::to_string(i % 50) + "\n";
    }
    if (!external.empty()) results.push_back(import_external_fill(tgt, external, {}, "a"));
    for (const auto& r : results) {
      for (std::size_t i = 0; i < tgt.size(); ++i) {
        if (tgt.values[i]) {
          ++observed;
          t.expect(r.series.values[i] == tgt.values[i] && r.series.flags[i] == tgt.flags[i],
                   "observed slot altered by " + std::string(to_string(r.series.correction->method)));
        } else if (r.series.values[i]) {
          t.expect(r.series.flags[i] == Flag::Filled, "filled slot not flagged");
        }
      }
      t.expect(validate_series(r.series).empty(), "fill result violates invariants");
    }
  }
  return from(t, "100 regression, 200 IDW, 500 linear cases, " + std::to_string(observed) + " observed slots swept");
}

// ---------------------------------------------------------------------------

Outcome versioning() {
  support::TempDir dir;
  std::mt19937_64 rng(1618);
  std::uniform_real_distribution<double> u(0, 1);
  const Principal admin{"u-admin", {}, true};
  struct Expected {
    std::string id;
    DailySeries v1;
    std::string pre_hash;
    std::vector<CorrectionRecord> records;
    std::vector<std::string> digests;
  };
  std::vector<Expected> expected;
  Tally t;
  {
    Store store(dir / "basinfo.db");
    Service svc(store, quick_config());
    store.put_study_area({"sa-v", "Versioning", std::nullopt, "u-admin"});
    svc.create_station(admin, {"st-n", "N", "Neighbour", StationKind::Rainfall, 9.60, 1.20, 300, 1970, "op", {}}, "sa-v");
    auto neighbour = support::random_series(rng, "nb", Variable{}, ymd(1990, 1, 1), 400, 0.0, 1, 0, 50);
    neighbour.station_id = "st-n";
    svc.register_series(admin, neighbour);

    for (int k = 0; k < 20; ++k) {
      const std::string st = "st-v" + std::to_string(k);
      svc.create_station(admin, {st, "V", "Station " + std::to_string(k), StationKind::Rainfall, 9.5, 1.1 + 0.001 * k,
                                 250, 1970, "op", {}},
                         "sa-v");
      std::vector<Slot> v;
      for (int i = 0; i < 400; ++i) v.push_back(std::round((1 + u(rng) * 9) * 10) / 10);
      v[50] = 900.0;  // outlier
      for (int g = 0; g < 5; ++g) v[static_cast<std::size_t>(100 + 20 * g)] = std::nullopt;  // single-day gaps
      for (int g = 0; g < 3; ++g) {
        for (int i = 0; i < 3; ++i) v[static_cast<std::size_t>(220 + 30 * g + i)] = std::nullopt;
      }
      for (int i = 0; i < 10; ++i) v[static_cast<std::size_t>(330 + i)] = std::nullopt;
      const auto s = DailySeries::raw("sv-" + std::to_string(k), st, Variable{}, ymd(1990, 1, 1), v);
      Expected e{s.id, s, series_digest(s), {}, {}};
      svc.register_series(admin, s);

      auto remember = [&](const DailySeries& committed) {
        e.records.push_back(*committed.correction);
        e.digests.push_back(series_digest(committed));
      };
      const auto flags = svc.detect_outliers(admin, s.id, std::nullopt);
      remember(svc.remove_outliers(admin, s.id, flags, 1));
      FillRequest lin;
      lin.max_gap_days = 1;
      remember(svc.fill_and_commit(admin, s.id, lin));
      lin.max_gap_days = 3;
      const auto pv = svc.preview_fill(admin, s.id, lin);
      remember(svc.commit_preview(admin, pv.preview_id));
      FillRequest ext;
      ext.method = CorrectionMethod::External;
      ext.external_data = (ymd(1990, 1, 1) + 330).iso() + "\t4.2\n";
      remember(svc.fill_and_commit(admin, s.id, ext));
      FillRequest idw;
      idw.method = CorrectionMethod::Idw;
      idw.neighbors = {"nb"};
      remember(svc.fill_and_commit(admin, s.id, idw));
      expected.push_back(std::move(e));
    }
    t.expect(store.validate().empty(), "store validation after commits");
  }

  Store reopened(dir / "basinfo.db");
  for (const auto& e : expected) {
    const auto versions = reopened.load_versions(e.id);
    if (!t.expect(versions.size() == 6, e.id + ": chain length " + std::to_string(versions.size()))) continue;
    t.expect(versions[0] == e.v1, e.id + ": version 1 changed");
    t.expect(series_digest(versions[0]) == e.pre_hash, e.id + ": version 1 hash differs from pre-correction hash");
    t.expect(reopened.stored_digest(e.id, 1) == e.pre_hash, e.id + ": stored version 1 hash");
    for (std::size_t k = 0; k < 5; ++k) {
      const auto& v = versions[k + 1];
      const std::string where = e.id + " v" + std::to_string(k + 2);
      t.expect(v.parent_version == static_cast<int>(k + 1), where + ": parent");
      t.expect(v.correction == e.records[k], where + ": correction record changed");
      t.expect(series_digest(v) == e.digests[k] && reopened.stored_digest(e.id, v.version) == e.digests[k],
               where + ": digest");
      const auto reparsed = json(e.records[k]).get<CorrectionRecord>();
      t.expect(reparsed == e.records[k] && canonical_json(reparsed) == canonical_json(e.records[k]),
               where + ": JSON round trip");
    }
    t.expect(versions[1].correction->method == CorrectionMethod::OutlierRemoval &&
                 versions[5].correction->method == CorrectionMethod::Idw,
             e.id + ": method order");
  }
  t.expect(reopened.validate().empty(), "store validation after reopen");
  return from(t, "20 chains of 5 commits verified after reopen");
}

// ---------------------------------------------------------------------------

struct Probe {
  std::string method;
  std::string path;
  json body = json::object();
  std::multimap<std::string, std::string> query = {};
  std::string raw = {};
};

Outcome permissions() {
  Tally t;
  support::World w;
  HttpApi api(*w.svc);
  NewAsset meta;
  meta.filename = "notes.txt";
  const auto asset = w.svc->register_asset(w.admin, "hello", meta);
  const auto pv = w.svc->preview_fill(w.admin, "st-a-p", FillRequest{});

  const std::vector<Probe> probes{
      {"POST", "/api/auth/logout"},
      {"GET", "/api/stations"},
      {"POST", "/api/stations", {{"name", "X"}, {"kind", "rainfall"}, {"lat", 9.5}, {"lon", 1.2}, {"studyArea", "sa-1"}}},
      {"GET", "/api/series"},
      {"POST", "/api/series", {{"stationId", "st-a"}, {"variable", "precipitation"}, {"data", "2001-01-01\t1\n"}}},
      {"GET", "/api/series/st-a-p"},
      {"GET", "/api/series/st-a-p/data"},
      {"GET", "/api/series/st-a-p/stats"},
      {"GET", "/api/series/st-a-p/gaps"},
      {"POST", "/api/series/st-a-p/aggregate", {{"step", "monthly"}}},
      {"POST", "/api/series/st-a-p/outliers/detect"},
      {"POST", "/api/series/st-a-p/outliers/remove", {{"flags", json::array()}}},
      {"POST", "/api/series/st-a-p/fill", {{"method", "temporal-linear"}}},
      {"POST", "/api/series/st-a-p/fill", {{"method", "temporal-linear"}, {"preview", false}}},
      {"POST", "/api/series/st-a-p/fill", {{"previewId", pv.preview_id}}},
      {"POST", "/api/analysis/correlate", {{"a", "st-a-p"}, {"b", "st-b-p"}}},
      {"POST", "/api/analysis/availability", {{"seriesIds", {"st-a-p"}}, {"from", "2013-01-01"}, {"to", "2013-12-31"}}},
      {"POST", "/api/analysis/overlap", {{"seriesIds", {"st-a-p", "st-b-p"}}, {"minFraction", 0.5}}},
      {"GET", "/api/catchments"},
      {"POST", "/api/catchments", {{"name", "X"}, {"studyArea", "sa-1"}, {"geometry", polygon_to_json(support::box(1, 9, 2, 10))}}},
      {"GET", "/api/catchments/c-root/coverage"},
      {"POST", "/api/catchments/c-root/link-stations"},
      {"POST", "/api/export", {{"seriesIds", {"st-a-p"}}}},
      {"POST", "/api/assets", json::object(), {{"filename", "x.txt"}, {"studyArea", "sa-1"}}, "payload"},
      {"GET", "/api/assets/" + asset.id},
      {"GET", "/api/assets/" + asset.id + "/metadata"},
      {"GET", "/api/admin/users"},
      {"POST", "/api/admin/users", {{"username", "mallory"}, {"password", "pw"}, {"isAdmin", true}}},
      {"GET", "/api/admin/grants"},
      {"POST", "/api/admin/grants", {{"subjectId", w.alice.id}, {"objectId", "st-a-p"}, {"actions", {"view-data"}}}},
      {"GET", "/csw", json::object(), {{"service", "CSW"}, {"request", "GetRecords"}, {"version", "2.0.2"}}},
      {"GET", "/csw", json::object(), {{"service", "CSW"}, {"request", "GetRecordById"}, {"version", "2.0.2"}, {"id", "st-a-p"}}},
  };

  // Every registered route must be exercised.
  std::set<std::string> covered;
  const auto routes = api.routes();
  for (const auto& p : probes) {
    for (const auto& r : routes) {
      if (r.method == p.method && std::regex_match(p.path, std::regex(r.pattern))) covered.insert(r.method + " " + r.pattern);
    }
  }
  for (const auto& r : routes) {
    if (r.pattern == "^/api/auth/login$") continue;
    t.expect(covered.count(r.method + " " + r.pattern) == 1, "route not swept: " + r.method + " " + r.pattern);
  }

  auto send = [&](const Probe& p, const std::string& token) {
    ApiRequest req;
    req.method = p.method;
    req.path = p.path;
    req.query = p.query;
    req.body = p.raw.empty() ? p.body.dump() : p.raw;
    if (!token.empty()) req.authorization = "Bearer " + token;
    return api.handle(req);
  };
  auto visible_in_csw = [](const ApiResponse& r) {
    if (r.body.find("GetRecordsResponse") != std::string::npos) return support::parse_search_results(r.body).matched;
    return r.body.find("ExceptionReport") != std::string::npos ? std::size_t{0} : std::size_t{1};
  };

  // Anonymous callers: 401 everywhere except the catalogue, which shows nothing.
  for (const auto& p : probes) {
    const auto r = send(p, "");
    if (p.path == "/csw") {
      t.expect(r.status == 200 && visible_in_csw(r) == 0, "anonymous csw leaks records");
    } else {
      t.expect(r.status == 401, "anonymous " + p.method + " " + p.path + " -> " + std::to_string(r.status));
    }
  }

  // A signed-in user without grants: empty lists, 403/404 elsewhere, and nothing changes.
  const auto before_versions = w.store->series_info("st-a-p")->head_version;
  const auto before_metadata = w.store->metadata().size();
  const auto before_grants = w.store->grants().size();
  std::size_t denied = 0;
  for (const auto& p : probes) {
    if (p.path == "/api/auth/logout") continue;
    const std::string token = w.svc->login("alice", "alice-pw");
    const auto r = send(p, token);
    const std::string what = p.method + " " + p.path + " -> " + std::to_string(r.status);
    if (p.path == "/csw") {
      t.expect(r.status == 200 && visible_in_csw(r) == 0, "csw leaks records to a grantless user");
    } else if (p.method == "GET" && (p.path == "/api/stations" || p.path == "/api/series" || p.path == "/api/catchments")) {
      t.expect(r.status == 200 && r.json().is_array() && r.json().empty(), what + " is not empty");
    } else {
      // Previews are private to their author; a foreign id reads as expired.
      const bool foreign_preview = p.body.contains("previewId") && r.status == 409;
      const bool ok = r.status == 403 || r.status == 404 || foreign_preview;
      denied += ok;
      t.expect(ok, what);
    }
  }
  t.expect(w.store->series_info("st-a-p")->head_version == before_versions, "a denied request committed a version");
  t.expect(w.store->metadata().size() == before_metadata, "a denied request created a record");
  t.expect(w.store->grants().size() == before_grants, "a denied request created a grant");
  {
    const std::string token = w.svc->login("alice", "alice-pw");
    t.expect(send(probes[0], token).status == 200, "logout");
    t.expect(send(probes[1], token).status == 401, "token survives logout");
  }

  // Monotonicity: G subset of G' never loses an allowed outcome.
  const std::vector<std::string> objects{"sa-m", "st-m1", "st-m2", "se-m1", "se-m2", "se-m3", "c-m"};
  const std::vector<std::pair<SubjectKind, std::string>> subjects{
      {SubjectKind::User, "u-t"}, {SubjectKind::Group, "g1"}, {SubjectKind::Group, "g2"},
      {SubjectKind::User, "u-o"}, {SubjectKind::Group, "g3"}};
  const Principal who{"u-t", {"g1", "g2"}, false};
  const Principal admin{"u-admin", {}, true};
  std::mt19937_64 rng(4242);
  std::size_t allowed_total = 0, trials_with_access = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 1000; ++trial) {
    Store store(":memory:");
    Service svc(store, quick_config());
    store.put_study_area({"sa-m", "M", std::nullopt, "u-admin"});
    store.add_user({"u-t", "t", "x", {"g1", "g2"}, false});
    store.add_user({"u-o", "o", "x", {"g3"}, false});
    svc.create_station(admin, {"st-m1", "1", "One", StationKind::Rainfall, 9.5, 1.2, 100, 1970, "op", {}}, "sa-m");
    svc.create_station(admin, {"st-m2", "2", "Two", StationKind::Climate, 9.6, 1.3, 100, 1970, "op", {}}, "sa-m");
    const std::vector<Slot> vals{1.0, 2.0, std::nullopt, 4.0};
    svc.register_series(admin, DailySeries::raw("se-m1", "st-m1", Variable{}, ymd(2014, 12, 1), vals));
    svc.register_series(admin, DailySeries::raw("se-m2", "st-m2", Variable{}, ymd(2014, 12, 1), vals));
    svc.register_series(admin, DailySeries::raw("se-m3", "st-m2", Variable{VariableCode::Temperature}, ymd(2014, 12, 1), vals));
    svc.create_catchment(admin, {"c-m", "M", std::nullopt, support::box(1.0, 9.0, 1.5, 10.0), 0}, "sa-m");
    NewAsset asset_meta;
    asset_meta.filename = "m.txt";
    const auto a = svc.register_asset(admin, "m", asset_meta);
    std::vector<std::string> objs = objects;
    objs.push_back(a.id);

    auto random_grant = [&] {
      PermissionGrant g;
      const auto& [kind, id] = subjects[rng() % subjects.size()];
      g.subject_kind = kind;
      g.subject_id = id;
      g.object_id = objs[rng() % objs.size()];
      g.actions = ActionSet::from_bits(static_cast<std::uint8_t>(1 + rng() % 31));
      return g;
    };
    auto outcomes = [&] {
      std::vector<bool> out;
      for (const auto& o : objs) {
        for (auto act : kAllActions) out.push_back(svc.allowed(who, o, act));
      }
      auto succeeds = [&](const std::function<void()>& fn) { return !error_code_of(fn).has_value(); };
      for (const auto* id : {"se-m1", "se-m2", "se-m3"}) {
        out.push_back(succeeds([&] { svc.series(who, id, std::nullopt); }));
        out.push_back(succeeds([&] { svc.gaps(who, id, std::nullopt); }));
        out.push_back(succeeds([&] { svc.export_text(who, ExportRequest{{id}, {}, {}, {}}); }));
        out.push_back(succeeds([&] { svc.series_detail(who, id); }));
      }
      out.push_back(succeeds([&] { svc.coverage(who, "c-m"); }));
      out.push_back(succeeds([&] { svc.asset_bytes(who, a.id); }));
      out.push_back(succeeds([&] { svc.asset(who, a.id); }));
      const auto listed = svc.list_series(who).size() + svc.list_stations(who).size() + svc.list_catchments(who).size();
      const auto res = svc.csw(who, {{"service", "CSW"}, {"request", "GetRecords"}, {"version", "2.0.2"}, {"maxRecords", "100"}}, "x");
      const auto csw_ids = support::parse_search_results(res.body).ids;
      for (std::size_t i = 0; i < 12; ++i) out.push_back(listed > i);
      for (const auto& o : objs) out.push_back(std::find(csw_ids.begin(), csw_ids.end(), o) != csw_ids.end());
      return out;
    };

    const auto none = outcomes();
    if (trial == 0) {
      t.expect(std::none_of(none.begin(), none.end(), [](bool b) { return b; }), "default deny with no grants");
    }
    const int base = static_cast<int>(rng() % 6);
    for (int i = 0; i < base; ++i) svc.add_grant(admin, random_grant());
    const auto g = outcomes();
    const int more = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < more; ++i) svc.add_grant(admin, random_grant());
    const auto g2 = outcomes();
    bool monotone = g.size() == g2.size();
    for (std::size_t i = 0; monotone && i < g.size(); ++i) monotone = !g[i] || g2[i];
    for (std::size_t i = 0; i < none.size(); ++i) monotone = monotone && (!none[i] || g[i]);
    t.expect(monotone, "trial " + std::to_string(trial) + " lost access after adding grants");
    const auto n_allowed = static_cast<std::size_t>(std::count(g2.begin(), g2.end(), true));
    allowed_total += n_allowed;
    trials_with_access += n_allowed > 0;
  }
  const double secs = Seconds(std::chrono::steady_clock::now() - t0).count();
  return from(t, std::to_string(probes.size()) + " probes over " + std::to_string(routes.size()) + " routes (" +
                     std::to_string(denied) + " denied), 1000 grant sets (" + std::to_string(trials_with_access) +
                     " with some access) in " + fmt(secs) + " s");
}

// ---------------------------------------------------------------------------

Outcome catalogue() {
  support::TempDir dir;
  Store store(dir / "basinfo.db");
  Service svc(store, quick_config());
  const Principal op{"operator", {}, true};
  fixture::load_kara(svc, op);
  svc.add_user(op, "curator", "curator-pw", {}, true);
  HttpApi api(svc);
  const std::string token = svc.login("curator", "curator-pw");
  Tally t;

  auto csw = [&](std::multimap<std::string, std::string> q, bool auth = true) {
    ApiRequest r;
    r.method = "GET";
    r.path = "/csw";
    r.query = std::move(q);
    if (auth) r.authorization = "Bearer " + token;
    return api.handle(r);
  };
  using Q = std::multimap<std::string, std::string>;
  const Q base{{"service", "CSW"}, {"version", "2.0.2"}, {"request", "GetRecords"}};
  auto with = [&](Q q, std::initializer_list<std::pair<const std::string, std::string>> extra) {
    q.insert(extra);
    return q;
  };

  const auto caps = csw({{"service", "CSW"}, {"request", "GetCapabilities"}});
  std::string err;
  t.expect(caps.status == 200 && support::xml_well_formed(caps.body, &err), "GetCapabilities not well formed " + err);

  const auto all = csw(with(base, {{"type", "series"}, {"maxRecords", "1000"}}));
  t.expect(support::xml_well_formed(all.body, &err), "GetRecords not well formed " + err);
  const auto full = support::parse_search_results(all.body);
  t.expect(full.matched == 112, "matched " + std::to_string(full.matched));
  t.expect(full.ids.size() == 112 && full.next == 0, "returned " + std::to_string(full.ids.size()));
  const auto cql = support::parse_search_results(
      csw(with(base, {{"constraint", "dc:type = 'series'"}, {"constraintLanguage", "CQL_TEXT"}, {"maxRecords", "1000"}})).body);
  t.expect(cql.matched == 112 && cql.ids == full.ids, "CQL type filter");
  const auto anonymous = support::parse_search_results(csw(with(base, {{"type", "series"}}), false).body);
  t.expect(anonymous.matched == 0, "anonymous sees " + std::to_string(anonymous.matched) + " records");

  for (int page : {1, 5, 10, 37, 112, 500}) {
    std::vector<std::string> ids;
    std::size_t start = 1;
    int pages = 0;
    while (start != 0 && pages < 200) {
      const auto r = csw(with(base, {{"type", "series"}, {"startPosition", std::to_string(start)},
                                     {"maxRecords", std::to_string(page)}}));
      t.expect(support::xml_well_formed(r.body), "page not well formed");
      const auto part = support::parse_search_results(r.body);
      t.expect(part.matched == 112, "paged matched count");
      ids.insert(ids.end(), part.ids.begin(), part.ids.end());
      start = part.next;
      ++pages;
    }
    t.expect(ids == full.ids, "paging by " + std::to_string(page) + " differs from unpaged");
  }
  const auto keyword = support::parse_search_results(
      csw(with(base, {{"constraint", "AnyText LIKE '%rainfall%' AND dc:type = 'series'"}, {"maxRecords", "1000"}})).body);
  t.expect(keyword.matched > 0 && keyword.matched < 112, "keyword filter");

  for (const auto& id : full.ids) {
    const auto r = csw({{"service", "CSW"}, {"version", "2.0.2"}, {"request", "GetRecordById"}, {"id", id}});
    t.expect(support::xml_well_formed(r.body) && r.body.find("<dc:identifier>" + id + "</dc:identifier>") != std::string::npos,
             "GetRecordById " + id);
  }
  for (const auto& q : {Q{{"request", "GetRecords"}}, Q{{"service", "CSW"}, {"request", "Transaction"}, {"version", "2.0.2"}},
                        with(base, {{"maxRecords", "-1"}}), with(base, {{"constraint", "bogus"}})}) {
    const auto r = csw(q);
    t.expect(support::xml_well_formed(r.body) && r.body.find("ows:ExceptionReport") != std::string::npos,
             "exception report");
  }
  return from(t, "112 series records matched, 6 page sizes, 112 GetRecordById");
}

// ---------------------------------------------------------------------------

DailySeries next_version(const DailySeries& head, std::size_t slot) {
  DailySeries next = head;
  next.version = head.version + 1;
  next.parent_version = head.version;
  next.values[slot] = static_cast<double>(head.version);
  next.flags[slot] = Flag::Filled;
  next.correction = CorrectionRecord{CorrectionMethod::External, {{"slot", std::to_string(slot)}}, {}, "t", "child"};
  return next;
}

void seed_durability(const std::filesystem::path& db) {
  Store store(db);
  store.put_study_area({"sa-d", "D", std::nullopt, "o"});
  MetadataRecord st_rec;
  st_rec.identifier = "st-d";
  st_rec.type = RecordType::Station;
  store.create_station({"st-d", "D", "D", StationKind::Rainfall, 9.5, 1.2, 100, 1970, "op", {}}, "sa-d", "o", st_rec);
  MetadataRecord rec;
  rec.identifier = "sd";
  std::vector<Slot> values(500, std::nullopt);
  values.front() = 1.0;
  store.create_series(DailySeries::raw("sd", "st-d", Variable{}, ymd(2000, 1, 1), values), "sa-d", "o", rec);
}

Outcome durability() {
  Tally t;
  std::mt19937_64 rng(99);
  std::size_t acked_total = 0;
  for (int round = 0; round < 10; ++round) {
    support::TempDir dir;
    seed_durability(dir / "db");
    const int want = 1 + static_cast<int>(rng() % 20);
    int fds[2];
    if (pipe(fds) != 0) return {false, "pipe failed"};
    const pid_t pid = fork();
    if (pid == 0) {
      close(fds[0]);
      Store store(dir / "db");
      for (std::size_t slot = 1;; ++slot) {
        const auto head = store.load_series("sd");
        store.commit_version(next_version(head, slot), head.version, "t");
        const char ack = 'a';
        if (write(fds[1], &ack, 1) != 1) _exit(3);
      }
    }
    close(fds[1]);
    int acked = 0;
    char c;
    while (acked < want && read(fds[0], &c, 1) == 1) ++acked;
    kill(pid, SIGKILL);
    close(fds[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    t.expect(WIFSIGNALED(status), "child was not killed");
    acked_total += static_cast<std::size_t>(acked);

    Store reopened(dir / "db");
    const int head = reopened.series_info("sd")->head_version;
    t.expect(head >= acked + 1, "round " + std::to_string(round) + ": head " + std::to_string(head) + " after " +
                                    std::to_string(acked) + " acknowledged commits");
    const auto problems = reopened.validate();
    t.expect(problems.empty(), "round " + std::to_string(round) + ": " + (problems.empty() ? "" : problems.front()));
    const auto last = reopened.load_series("sd");
    for (int v = 1; v < head; ++v) {
      t.expect(last.values[static_cast<std::size_t>(v)] == static_cast<double>(v), "acknowledged slot lost");
    }
  }

  // Racing writers on separate connections: threads, then processes.
  std::size_t races = 0;
  {
    support::TempDir dir;
    seed_durability(dir / "db");
    for (int round = 0; round < 20; ++round) {
      Store a(dir / "db"), b(dir / "db");
      const auto head = a.load_series("sd");
      std::atomic<int> ok{0}, stale{0};
      auto attempt = [&](Store& s, std::size_t slot) {
        try {
          s.commit_version(next_version(head, slot), head.version, "t");
          ++ok;
        } catch (const Error& e) {
          if (e.code() == ErrorCode::StaleWrite) ++stale;
        }
      };
      std::thread t1(attempt, std::ref(a), 1 + 2 * static_cast<std::size_t>(round));
      std::thread t2(attempt, std::ref(b), 2 + 2 * static_cast<std::size_t>(round));
      t1.join();
      t2.join();
      t.expect(ok == 1 && stale == 1, "thread race " + std::to_string(round) + ": " + std::to_string(ok.load()) +
                                          " successes");
      ++races;
    }
    for (int round = 0; round < 5; ++round) {
      int go[2];
      if (pipe(go) != 0) return {false, "pipe failed"};
      const int head = Store(dir / "db").series_info("sd")->head_version;
      std::vector<pid_t> kids;
      for (int k = 0; k < 2; ++k) {
        const pid_t pid = fork();
        if (pid == 0) {
          close(go[1]);
          Store s(dir / "db");
          const auto h = s.load_series("sd", head);
          char c;
          if (read(go[0], &c, 1) != 0) _exit(4);
          try {
            s.commit_version(next_version(h, 100 + static_cast<std::size_t>(k)), head, "t");
            _exit(0);
          } catch (const Error& e) {
            _exit(e.code() == ErrorCode::StaleWrite ? 10 : 5);
          }
        }
        kids.push_back(pid);
      }
      close(go[0]);
      close(go[1]);  // releases both children at once
      int ok = 0, stale = 0;
      for (auto pid : kids) {
        int status = 0;
        waitpid(pid, &status, 0);
        if (WIFEXITED(status) && WEXITSTATUS(status) == 0) ++ok;
        if (WIFEXITED(status) && WEXITSTATUS(status) == 10) ++stale;
      }
      t.expect(ok == 1 && stale == 1, "process race " + std::to_string(round) + ": " + std::to_string(ok) + " successes");
      ++races;
    }
    t.expect(Store(dir / "db").validate().empty(), "store validation after races");
  }
  return from(t, "10 kill/restart rounds (" + std::to_string(acked_total) + " acknowledged commits), " +
                     std::to_string(races) + " races");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"fixture-fidelity", fixture_fidelity}, {"export-parse-round-trip", round_trip},
      {"analytics-oracles", analytics},       {"aggregation", aggregation},
      {"fill-correctness", fills},            {"versioning-provenance", versioning},
      {"permissions", permissions},           {"csw", catalogue},
      {"durability", durability},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = Seconds(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << std::left << std::setw(26) << name << " " << o.detail << " ["
              << fmt(secs) << " s]" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed ? 1 : 0;
}
