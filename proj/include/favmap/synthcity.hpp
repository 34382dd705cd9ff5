#pragma once

#include "favmap/dataset.hpp"
#include "favmap/geom.hpp"
#include "favmap/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace favmap {

/// Synthetic city: a grid of tiles with pixel-snapped favela rectangles,
/// industrial zones, parks, sparse suburbs and formal blocks. Favela pixels
/// get brightness noise with favela_texture_std, all other pixels
/// formal_texture_std.
struct ScenarioConfig {
    Rect extent{680000.0, 7450000.0, 680000.0 + 48 * 150.0, 7450000.0 + 48 * 150.0};
    double pixel_size = 5.0;
    double tile_size = 150.0;
    std::size_t n_favelas = 8;
    double favela_texture_std = 0.30;
    double formal_texture_std = 0.10;
    double target_imbalance = 30.0; // nonfavela : favela among labeled tiles
    std::uint64_t seed = 0;
};

void validate(const ScenarioConfig& cfg);

struct Scenario {
    ScenarioConfig config;
    TileGrid grid;
    Raster imagery;   // bands "red", "nir"
    Raster buildings; // band "built": built-up fraction per pixel
    std::vector<MultiPolygon> favelas; // one entry per favela (union of rectangles)
    MultiPolygon industrial;
    /// Exact per-tile statistics; label holds the expected label under the
    /// default LabelRules (favela, nonfavela or discarded).
    std::vector<TileRecord> truth;

    MultiPolygon all_favelas() const;
};

/// Deterministic in cfg. Throws InvalidArgument for an invalid config or a
/// grid smaller than 4x4 tiles, DataError when the favelas cannot be placed
/// at the requested imbalance.
Scenario generate(const ScenarioConfig& cfg);

/// Writes imagery.fgrid, buildings.fgrid, favelas.geojson, industrial.geojson,
/// truth.csv and scenario.json into dir (created if needed).
void emit(const Scenario& scenario, const std::filesystem::path& dir);

/// truth.csv: row,col,favela_prop,veg_prop,building_prop,industrial,expected_label
std::string truth_csv(const std::vector<TileRecord>& truth);
std::vector<TileRecord> read_truth_csv(const std::filesystem::path& path);

/// Nonfavela / favela count over the expected labels; 0 if no favela tile.
double truth_imbalance(const std::vector<TileRecord>& truth);

} // namespace favmap
