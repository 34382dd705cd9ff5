#pragma once

#include "favmap/geojson.hpp"
#include "favmap/geom.hpp"
#include "favmap/raster.hpp"

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace favmap {

struct TileId {
    std::size_t row = 0;
    std::size_t col = 0;

    friend auto operator<=>(const TileId&, const TileId&) = default;
};

std::string to_string(const TileId& id);

/// Orthogonal analysis grid. (origin_x, origin_y) is the top-left corner;
/// rows grow downwards (towards smaller y), columns towards larger x.
struct TileGrid {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double tile_size = 150.0;
    std::size_t n_cols = 1;
    std::size_t n_rows = 1;

    std::size_t size() const noexcept { return n_cols * n_rows; }
    Rect extent() const noexcept;
};

/// Grid anchored at the extent's top-left corner with
/// ceil(width / tile_size) x ceil(height / tile_size) tiles.
TileGrid make_grid(const Rect& extent, double tile_size = 150.0);

/// Square of side tile_size at (row, col); tile (0, 0) spans
/// [origin_x, origin_x + s] x [origin_y - s, origin_y]. Throws InvalidArgument
/// for out-of-range indices.
Rect tile_extent(const TileGrid& grid, std::size_t row, std::size_t col);

struct LabelRules {
    double building_min = 0.50;   // removed if building_prop <  building_min
    double veg_max = 0.95;        // removed if veg_prop      >  veg_max
    double favela_min = 0.70;     // favela  if favela_prop   >= favela_min
    double ndvi_threshold = 0.60; // vegetation pixel if ndvi >= ndvi_threshold
};

/// All thresholds in [0, 1] and favela_min > 0; throws InvalidArgument.
void validate(const LabelRules& rules);

enum class Label { unset, favela, nonfavela, discarded };

/// Why a tile left the dataset. Filter reasons are reported in this order.
enum class DiscardReason { low_building, high_vegetation, industrial, ambiguous };

std::string_view to_string(Label label) noexcept;
std::string_view to_string(DiscardReason reason) noexcept;

struct TileRecord {
    TileId id;
    double favela_prop = 0.0;
    double veg_prop = 0.0;
    double building_prop = 0.0;
    bool industrial = false;
    Label label = Label::unset;
    std::vector<DiscardReason> reasons;
};

struct FilterResult {
    bool kept = true;
    std::vector<DiscardReason> reasons; // empty when kept
};

FilterResult apply_filters(const TileRecord& record, const LabelRules& rules);

/// Label of a tile that passed the filters; depends on favela_prop only.
/// Returns Label::discarded for the ambiguous band ]0, favela_min[.
Label assign_label(const TileRecord& record, const LabelRules& rules);

/// Runs apply_filters and assign_label, filling label and reasons.
void classify(TileRecord& record, const LabelRules& rules);

/// Input layers, all in the grid's projected CRS.
struct StatsLayers {
    const MultiPolygon& favelas;
    const Raster& ndvi;
    const Raster& buildings;
    const MultiPolygon& industrial;
    std::string ndvi_band = "ndvi";
    std::string building_band = "built";
};

struct TileStats {
    std::vector<TileRecord> records; // ordered by (row, col), labels unset
    std::vector<std::string> warnings;
};

/// Per-tile coverage statistics:
///   favela_prop   = coverage_proportion(favelas, tile)
///   veg_prop      = fraction of pixels with ndvi >= rules.ndvi_threshold
///   building_prop = mean built-up fraction of pixels centered in the tile
///   industrial    = industrial layer overlaps the tile with positive area
/// Throws DataError listing tiles that contain no valid pixel of either
/// raster. Output is independent of `threads` (0 = all cores).
TileStats compute_tile_stats(const TileGrid& grid, const StatsLayers& layers,
                             const LabelRules& rules, unsigned threads = 0);

struct Provenance {
    TileGrid grid;
    LabelRules rules;
    std::size_t total_tiles = 0;
    std::size_t removed = 0;
    std::size_t removed_low_building = 0;    // a tile may count under several reasons
    std::size_t removed_high_vegetation = 0;
    std::size_t removed_industrial = 0;
    std::size_t ambiguous = 0;
    std::size_t favela = 0;
    std::size_t nonfavela = 0;
    std::optional<double> imbalance_ratio; // nonfavela / favela over labeled tiles
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, std::string>> inputs;
};

struct LabeledDataset {
    std::vector<TileRecord> tiles; // favela and nonfavela only, ordered by (row, col)
    Provenance provenance;
};

/// Classifies all records and keeps the labeled ones.
LabeledDataset summarize(const TileGrid& grid, std::vector<TileRecord> records,
                         const LabelRules& rules, std::vector<std::string> warnings = {});

LabeledDataset build_dataset(const TileGrid& grid, const StatsLayers& layers,
                             const LabelRules& rules, unsigned threads = 0);

/// File-based inputs. The imagery raster must carry either an "ndvi" band or
/// the red and nir bands; the grid extent defaults to the imagery extent.
struct DatasetInputs {
    std::filesystem::path imagery;
    std::filesystem::path buildings;
    std::filesystem::path favelas;
    std::filesystem::path industrial;
    std::optional<Rect> extent;
    double tile_size = 150.0;
    std::string red_band = "red";
    std::string nir_band = "nir";
    std::string building_band = "built";
};

LabeledDataset build_dataset_from_files(const DatasetInputs& inputs, const LabelRules& rules,
                                        unsigned threads = 0);

/// CSV: row,col,favela_prop,veg_prop,building_prop,industrial,label
std::string dataset_csv(const std::vector<TileRecord>& tiles);
void write_dataset_csv(const std::vector<TileRecord>& tiles, const std::filesystem::path& path);
std::vector<TileRecord> read_dataset_csv(const std::filesystem::path& path);
std::vector<TileRecord> parse_dataset_csv(std::string_view text);

std::string provenance_json(const Provenance& prov);
void write_provenance(const Provenance& prov, const std::filesystem::path& path);
Provenance read_provenance(const std::filesystem::path& path);

/// Labeled tile squares with their statistics as properties.
std::vector<GeoFeature> tile_features(const TileGrid& grid, const std::vector<TileRecord>& tiles);

} // namespace favmap
