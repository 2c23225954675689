#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace basinfo {

struct LonLat {
  double lon = 0;
  double lat = 0;
  bool operator==(const LonLat&) const = default;
};

using Ring = std::vector<LonLat>;

/// First ring is the outer boundary, the rest are holes.
struct Polygon {
  std::vector<Ring> rings;

  /// Throws InvalidArgument on open or short rings and out-of-range coordinates.
  void validate() const;
  bool operator==(const Polygon&) const = default;
};

nlohmann::json polygon_to_json(const Polygon& p);
Polygon polygon_from_json(const nlohmann::json& j);

struct BoundingBox {
  double min_lon = 0, min_lat = 0, max_lon = 0, max_lat = 0;
  bool operator==(const BoundingBox&) const = default;
};
BoundingBox bounding_box(const Polygon& p);

// ESRI shapefile (.shp main file) geometry.
enum class ShapeType : std::int32_t { Null = 0, Point = 1, Polygon = 5 };

struct ShapefileContents {
  ShapeType shape_type = ShapeType::Null;
  std::vector<Polygon> polygons;
  std::vector<LonLat> points;
};

/// Reads the main-file header and every record. Only point and polygon files
/// are accepted. A clockwise ring after the first starts a new polygon; other
/// rings are holes of the preceding polygon.
ShapefileContents parse_shapefile_geometry(std::span<const std::uint8_t> bytes);
ShapefileContents parse_shapefile_geometry(std::string_view bytes);

/// Writes a polygon main file, one record per polygon, rings in the given order.
std::vector<std::uint8_t> assemble_polygon_shapefile(std::span<const Polygon> polygons);
std::vector<std::uint8_t> assemble_point_shapefile(std::span<const LonLat> points);

/// Even-odd containment over all rings; points on any edge or vertex are inside.
bool point_in_polygon(LonLat p, const Polygon& poly);

/// Signed planar ring area in degree² (positive when counter-clockwise).
double signed_ring_area(const Ring& ring);

/// Area of a great-circle polygon (outer minus holes) on a 6371 km sphere.
double spherical_area_km2(const Polygon& poly);

/// Distance in km from `p` to the nearest polygon edge (0 when inside).
double distance_to_polygon_km(LonLat p, const Polygon& poly);

struct Catchment {
  std::string id;
  std::string name;
  std::optional<std::string> parent_id;
  Polygon geometry;
  double area_km2 = 0;
};

/// Depth of `id` in the hierarchy (root = 0). Throws InvalidArgument on cycles
/// and UnknownCatchment on dangling parents.
int catchment_depth(const std::string& id, std::span<const Catchment> all);

/// Deepest catchment among `candidates` whose geometry contains `p`.
std::optional<std::string> deepest_containing(LonLat p, std::span<const Catchment> candidates,
                                              std::span<const Catchment> all);

enum class AssetKind { Vector, Raster, Document };
std::string_view to_string(AssetKind k);
AssetKind parse_asset_kind(std::string_view name);

struct Asset {
  std::string id;
  AssetKind kind = AssetKind::Document;
  std::string filename;
  std::int64_t byte_size = 0;
  std::string checksum;  // sha256 hex of the stored bytes
  std::optional<BoundingBox> bbox;
  std::string crs = "EPSG:4326";
};

}  // namespace basinfo
