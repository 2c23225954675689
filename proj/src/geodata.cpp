#include "basinfo/geodata.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <set>

#include "basinfo/error.hpp"

namespace basinfo {
namespace {

constexpr std::int32_t kFileCode = 9994;
constexpr std::int32_t kVersion = 1000;
constexpr std::size_t kHeaderBytes = 100;
constexpr double kEarthRadiusKm = 6371.0;
constexpr double kDeg = std::numbers::pi / 180.0;

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  bool has(std::size_t pos, std::size_t n) const { return pos <= bytes_.size() && n <= bytes_.size() - pos; }

  std::int32_t int_be(std::size_t pos) const {
    need(pos, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos + static_cast<std::size_t>(i)];
    return static_cast<std::int32_t>(v);
  }
  std::int32_t int_le(std::size_t pos) const {
    need(pos, 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos + static_cast<std::size_t>(i)];
    return static_cast<std::int32_t>(v);
  }
  double double_le(std::size_t pos) const {
    need(pos, 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes_[pos + static_cast<std::size_t>(i)];
    return std::bit_cast<double>(v);
  }

 private:
  void need(std::size_t pos, std::size_t n) const {
    if (!has(pos, n)) {
      throw Error(ErrorCode::TruncatedRecord, "shapefile truncated at byte " + std::to_string(pos),
                  std::to_string(pos));
    }
  }
  std::span<const std::uint8_t> bytes_;
};

class Writer {
 public:
  void int_be(std::int32_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(u >> s));
  }
  void int_le(std::int32_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(u >> s));
  }
  void double_le(double d) {
    const auto u = std::bit_cast<std::uint64_t>(d);
    for (int s = 0; s < 64; s += 8) out.push_back(static_cast<std::uint8_t>(u >> s));
  }
  void patch_int_be(std::size_t pos, std::int32_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) out[pos + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(u >> (24 - 8 * i));
  }
  std::vector<std::uint8_t> out;
};

void write_header(Writer& w, ShapeType type, const BoundingBox& box) {
  w.int_be(kFileCode);
  for (int i = 0; i < 5; ++i) w.int_be(0);
  w.int_be(0);  // file length, patched later
  w.int_le(kVersion);
  w.int_le(static_cast<std::int32_t>(type));
  w.double_le(box.min_lon);
  w.double_le(box.min_lat);
  w.double_le(box.max_lon);
  w.double_le(box.max_lat);
  for (int i = 0; i < 4; ++i) w.double_le(0.0);  // Z and M ranges
}

bool on_segment(LonLat p, LonLat a, LonLat b) {
  const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
  const double scale = std::max({std::abs(b.lon - a.lon), std::abs(b.lat - a.lat), 1.0});
  if (std::abs(cross) > 1e-12 * scale) return false;
  return p.lon >= std::min(a.lon, b.lon) - 1e-12 && p.lon <= std::max(a.lon, b.lon) + 1e-12 &&
         p.lat >= std::min(a.lat, b.lat) - 1e-12 && p.lat <= std::max(a.lat, b.lat) + 1e-12;
}

// Excess of the region between an edge and the equator (sign follows edge direction).
double edge_excess(LonLat a, LonLat b) {
  double dlon = (b.lon - a.lon) * kDeg;
  if (dlon > std::numbers::pi) dlon -= 2 * std::numbers::pi;
  if (dlon < -std::numbers::pi) dlon += 2 * std::numbers::pi;
  const double t1 = std::tan(a.lat * kDeg / 2);
  const double t2 = std::tan(b.lat * kDeg / 2);
  return 2 * std::atan2(std::tan(dlon / 2) * (t1 + t2), 1 + t1 * t2);
}

double ring_area_km2(const Ring& ring) {
  double excess = 0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) excess += edge_excess(ring[i], ring[i + 1]);
  return std::abs(excess) * kEarthRadiusKm * kEarthRadiusKm;
}

}  // namespace

void Polygon::validate() const {
  if (rings.empty()) throw Error(ErrorCode::InvalidArgument, "polygon has no rings");
  for (const auto& ring : rings) {
    if (ring.size() < 4) throw Error(ErrorCode::InvalidArgument, "polygon ring needs at least 4 vertices");
    if (!(ring.front() == ring.back())) throw Error(ErrorCode::InvalidArgument, "polygon ring is not closed");
    for (const auto& v : ring) {
      if (!(v.lon >= -180 && v.lon <= 180 && v.lat >= -90 && v.lat <= 90)) {
        throw Error(ErrorCode::InvalidArgument, "polygon vertex outside WGS84 bounds");
      }
    }
  }
}

nlohmann::json polygon_to_json(const Polygon& p) {
  auto rings = nlohmann::json::array();
  for (const auto& ring : p.rings) {
    auto r = nlohmann::json::array();
    for (const auto& v : ring) r.push_back({v.lon, v.lat});
    rings.push_back(std::move(r));
  }
  return {{"rings", std::move(rings)}};
}

Polygon polygon_from_json(const nlohmann::json& j) {
  Polygon p;
  try {
    for (const auto& r : j.at("rings")) {
      Ring ring;
      for (const auto& v : r) {
        if (v.size() != 2) throw Error(ErrorCode::InvalidArgument, "vertex must be [lon, lat]");
        ring.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
      }
      p.rings.push_back(std::move(ring));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed geometry: ") + e.what());
  }
  p.validate();
  return p;
}

BoundingBox bounding_box(const Polygon& p) {
  BoundingBox b{180, 90, -180, -90};
  for (const auto& ring : p.rings) {
    for (const auto& v : ring) {
      b.min_lon = std::min(b.min_lon, v.lon);
      b.min_lat = std::min(b.min_lat, v.lat);
      b.max_lon = std::max(b.max_lon, v.lon);
      b.max_lat = std::max(b.max_lat, v.lat);
    }
  }
  return b;
}

double signed_ring_area(const Ring& ring) {
  double a = 0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    a += ring[i].lon * ring[i + 1].lat - ring[i + 1].lon * ring[i].lat;
  }
  return a / 2;
}

ShapefileContents parse_shapefile_geometry(std::string_view bytes) {
  return parse_shapefile_geometry(
      std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

ShapefileContents parse_shapefile_geometry(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  if (bytes.size() < kHeaderBytes) {
    if (bytes.size() >= 4 && in.int_be(0) != kFileCode) {
      throw Error(ErrorCode::BadMagic, "not a shapefile (file code " + std::to_string(in.int_be(0)) + ")");
    }
    throw Error(ErrorCode::TruncatedRecord, "shapefile header shorter than 100 bytes",
                std::to_string(bytes.size()));
  }
  const auto code = in.int_be(0);
  if (code != kFileCode) {
    throw Error(ErrorCode::BadMagic, "not a shapefile (file code " + std::to_string(code) + ")",
                std::to_string(code));
  }
  const auto type = in.int_le(32);
  if (type != static_cast<std::int32_t>(ShapeType::Point) && type != static_cast<std::int32_t>(ShapeType::Polygon)) {
    throw Error(ErrorCode::UnsupportedShapeType, "unsupported shape type " + std::to_string(type),
                std::to_string(type));
  }
  ShapefileContents out;
  out.shape_type = static_cast<ShapeType>(type);
  const auto declared = static_cast<std::size_t>(std::max(in.int_be(24), 0)) * 2;
  const std::size_t end = std::min(bytes.size(), std::max(declared, kHeaderBytes));
  if (declared > bytes.size()) {
    throw Error(ErrorCode::TruncatedRecord, "file length field exceeds available bytes",
                std::to_string(declared));
  }

  std::size_t pos = kHeaderBytes;
  while (pos < end) {
    if (!in.has(pos, 8) || pos + 8 > end) {
      throw Error(ErrorCode::TruncatedRecord, "record header truncated at byte " + std::to_string(pos),
                  std::to_string(pos));
    }
    const auto content_len = static_cast<std::size_t>(in.int_be(pos + 4)) * 2;
    const std::size_t body = pos + 8;
    if (in.int_be(pos + 4) < 2 || body + content_len > end) {
      throw Error(ErrorCode::TruncatedRecord, "record at byte " + std::to_string(pos) + " overruns the file",
                  std::to_string(pos));
    }
    const std::size_t body_end = body + content_len;
    const auto rec_type = in.int_le(body);
    if (rec_type == 0) {
      pos = body_end;
      continue;
    }
    if (rec_type != type) {
      throw Error(ErrorCode::UnsupportedShapeType, "record shape type " + std::to_string(rec_type) +
                                                       " differs from file type",
                  std::to_string(rec_type));
    }
    if (out.shape_type == ShapeType::Point) {
      if (content_len < 20) throw Error(ErrorCode::TruncatedRecord, "point record too short", std::to_string(pos));
      out.points.push_back({in.double_le(body + 4), in.double_le(body + 12)});
    } else {
      if (content_len < 44) throw Error(ErrorCode::TruncatedRecord, "polygon record too short", std::to_string(pos));
      const auto num_parts = in.int_le(body + 36);
      const auto num_points = in.int_le(body + 40);
      const std::size_t parts_at = body + 44;
      if (num_parts < 1 || num_points < 0 ||
          parts_at + 4 * static_cast<std::size_t>(num_parts) + 16 * static_cast<std::size_t>(num_points) > body_end) {
        throw Error(ErrorCode::TruncatedRecord, "polygon record counts exceed record length",
                    std::to_string(pos));
      }
      const std::size_t points_at = parts_at + 4 * static_cast<std::size_t>(num_parts);
      std::vector<std::int32_t> starts;
      for (std::int32_t i = 0; i < num_parts; ++i) starts.push_back(in.int_le(parts_at + 4 * static_cast<std::size_t>(i)));
      starts.push_back(num_points);
      for (std::size_t i = 0; i + 1 < starts.size(); ++i) {
        if (starts[i] < 0 || starts[i] > starts[i + 1]) {
          throw Error(ErrorCode::TruncatedRecord, "polygon part index out of order", std::to_string(pos));
        }
      }
      for (std::size_t part = 0; part + 1 < starts.size(); ++part) {
        Ring ring;
        for (auto k = starts[part]; k < starts[part + 1]; ++k) {
          const std::size_t at = points_at + 16 * static_cast<std::size_t>(k);
          ring.push_back({in.double_le(at), in.double_le(at + 8)});
        }
        const bool clockwise = signed_ring_area(ring) < 0;
        if (part == 0 || clockwise) {
          out.polygons.push_back(Polygon{{std::move(ring)}});
        } else {
          out.polygons.back().rings.push_back(std::move(ring));
        }
      }
    }
    pos = body_end;
  }
  return out;
}

std::vector<std::uint8_t> assemble_polygon_shapefile(std::span<const Polygon> polygons) {
  BoundingBox all{0, 0, 0, 0};
  for (std::size_t i = 0; i < polygons.size(); ++i) {
    const auto b = bounding_box(polygons[i]);
    if (i == 0) all = b;
    all = {std::min(all.min_lon, b.min_lon), std::min(all.min_lat, b.min_lat),
           std::max(all.max_lon, b.max_lon), std::max(all.max_lat, b.max_lat)};
  }
  Writer w;
  write_header(w, ShapeType::Polygon, all);
  std::int32_t record = 1;
  for (const auto& poly : polygons) {
    std::size_t n_points = 0;
    for (const auto& r : poly.rings) n_points += r.size();
    const auto content_words = static_cast<std::int32_t>((44 + 4 * poly.rings.size() + 16 * n_points) / 2);
    w.int_be(record++);
    w.int_be(content_words);
    w.int_le(static_cast<std::int32_t>(ShapeType::Polygon));
    const auto b = bounding_box(poly);
    w.double_le(b.min_lon);
    w.double_le(b.min_lat);
    w.double_le(b.max_lon);
    w.double_le(b.max_lat);
    w.int_le(static_cast<std::int32_t>(poly.rings.size()));
    w.int_le(static_cast<std::int32_t>(n_points));
    std::int32_t start = 0;
    for (const auto& r : poly.rings) {
      w.int_le(start);
      start += static_cast<std::int32_t>(r.size());
    }
    for (const auto& r : poly.rings) {
      for (const auto& v : r) {
        w.double_le(v.lon);
        w.double_le(v.lat);
      }
    }
  }
  w.patch_int_be(24, static_cast<std::int32_t>(w.out.size() / 2));
  return std::move(w.out);
}

std::vector<std::uint8_t> assemble_point_shapefile(std::span<const LonLat> points) {
  BoundingBox all{0, 0, 0, 0};
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i == 0) all = {points[i].lon, points[i].lat, points[i].lon, points[i].lat};
    all = {std::min(all.min_lon, points[i].lon), std::min(all.min_lat, points[i].lat),
           std::max(all.max_lon, points[i].lon), std::max(all.max_lat, points[i].lat)};
  }
  Writer w;
  write_header(w, ShapeType::Point, all);
  std::int32_t record = 1;
  for (const auto& p : points) {
    w.int_be(record++);
    w.int_be(10);
    w.int_le(static_cast<std::int32_t>(ShapeType::Point));
    w.double_le(p.lon);
    w.double_le(p.lat);
  }
  w.patch_int_be(24, static_cast<std::int32_t>(w.out.size() / 2));
  return std::move(w.out);
}

bool point_in_polygon(LonLat p, const Polygon& poly) {
  for (const auto& ring : poly.rings) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      if (on_segment(p, ring[i], ring[i + 1])) return true;
    }
  }
  bool inside = false;
  for (const auto& ring : poly.rings) {
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
      const auto& a = ring[i];
      const auto& b = ring[j];
      if ((a.lat > p.lat) != (b.lat > p.lat) &&
          p.lon < (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon) {
        inside = !inside;
      }
    }
  }
  return inside;
}

double spherical_area_km2(const Polygon& poly) {
  if (poly.rings.empty()) return 0;
  double area = ring_area_km2(poly.rings.front());
  for (std::size_t i = 1; i < poly.rings.size(); ++i) area -= ring_area_km2(poly.rings[i]);
  return std::max(area, 0.0);
}

double distance_to_polygon_km(LonLat p, const Polygon& poly) {
  if (point_in_polygon(p, poly)) return 0;
  const double km_per_deg = kEarthRadiusKm * kDeg;
  const double kx = km_per_deg * std::cos(p.lat * kDeg);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& ring : poly.rings) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      const double ax = (ring[i].lon - p.lon) * kx, ay = (ring[i].lat - p.lat) * km_per_deg;
      const double bx = (ring[i + 1].lon - p.lon) * kx, by = (ring[i + 1].lat - p.lat) * km_per_deg;
      const double dx = bx - ax, dy = by - ay;
      const double len2 = dx * dx + dy * dy;
      const double t = len2 > 0 ? std::clamp(-(ax * dx + ay * dy) / len2, 0.0, 1.0) : 0.0;
      best = std::min(best, std::hypot(ax + t * dx, ay + t * dy));
    }
  }
  return best;
}

int catchment_depth(const std::string& id, std::span<const Catchment> all) {
  auto find = [&](const std::string& key) -> const Catchment* {
    for (const auto& c : all) {
      if (c.id == key) return &c;
    }
    return nullptr;
  };
  std::set<std::string> seen;
  int depth = 0;
  const Catchment* c = find(id);
  if (!c) throw Error(ErrorCode::UnknownCatchment, "unknown catchment " + id, id);
  while (c->parent_id) {
    if (!seen.insert(c->id).second) throw Error(ErrorCode::InvalidArgument, "catchment hierarchy has a cycle", id);
    const Catchment* parent = find(*c->parent_id);
    if (!parent) throw Error(ErrorCode::UnknownCatchment, "unknown parent catchment " + *c->parent_id, *c->parent_id);
    c = parent;
    ++depth;
    if (seen.count(c->id)) throw Error(ErrorCode::InvalidArgument, "catchment hierarchy has a cycle", id);
  }
  return depth;
}

std::optional<std::string> deepest_containing(LonLat p, std::span<const Catchment> candidates,
                                              std::span<const Catchment> all) {
  std::optional<std::string> best;
  int best_depth = -1;
  for (const auto& c : candidates) {
    if (!point_in_polygon(p, c.geometry)) continue;
    const int d = catchment_depth(c.id, all);
    if (d > best_depth || (d == best_depth && best && c.id < *best)) {
      best = c.id;
      best_depth = d;
    }
  }
  return best;
}

std::string_view to_string(AssetKind k) {
  switch (k) {
    case AssetKind::Vector: return "vector";
    case AssetKind::Raster: return "raster";
    case AssetKind::Document: return "document";
  }
  return "";
}

AssetKind parse_asset_kind(std::string_view name) {
  for (auto k : {AssetKind::Vector, AssetKind::Raster, AssetKind::Document}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown asset kind '" + std::string(name) + "'", std::string(name));
}

}  // namespace basinfo
