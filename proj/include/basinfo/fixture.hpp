#pragma once

#include <cstdint>
#include <string>

#include "basinfo/geodata.hpp"
#include "basinfo/service.hpp"

namespace basinfo::fixture {

inline constexpr std::uint64_t kKaraSeed = 0x4b415241;  // "KARA"
inline constexpr double kKaraAreaKm2 = 5287.0;
inline constexpr const char* kStudyArea = "sa-kara";
inline constexpr const char* kBasinCatchment = "kara";
inline constexpr const char* kParentCatchment = "oti";

struct Bounds {
  double min_lon = 0.5, max_lon = 1.633, min_lat = 9.25, max_lat = 10.017;
};
inline constexpr Bounds kStationBounds{};

struct Summary {
  std::size_t series = 0;
  std::size_t stations = 0;
  std::size_t catchments = 0;
  Date reference_date;
  double basin_area_km2 = 0;
};

/// Synthetic Kara basin outline, scaled so its spherical area matches the basin.
Polygon kara_polygon();

/// Builds the synthetic Kara study area through `svc` as principal `who`
/// (which must be allowed to create study-area content). Throws Conflict if
/// the study area already exists.
Summary load_kara(Service& svc, const Principal& who);

}  // namespace basinfo::fixture
