#pragma once

#include "favmap/geom.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace favmap {

/// Reads every Polygon and MultiPolygon in a GeoJSON document (bare geometry,
/// Feature or FeatureCollection) into one MultiPolygon. Rings are cleaned
/// with make_ring and orientation is normalized. Features with a null
/// geometry are skipped; any other geometry type is a DataError.
MultiPolygon parse_geojson_polygons(std::string_view text);
MultiPolygon read_geojson_polygons(const std::filesystem::path& path);

using PropertyValue = std::variant<std::string, double, long long, bool>;

struct GeoFeature {
    MultiPolygon geometry;
    std::vector<std::pair<std::string, PropertyValue>> properties;
};

/// FeatureCollection text; each feature is written as a MultiPolygon with
/// explicitly closed rings. Output is deterministic.
std::string to_geojson(std::span<const GeoFeature> features);
void write_geojson(std::span<const GeoFeature> features, const std::filesystem::path& path);

} // namespace favmap
