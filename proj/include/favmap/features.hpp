#pragma once

#include "favmap/dataset.hpp"
#include "favmap/matrix.hpp"
#include "favmap/raster.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace favmap {

struct FeatureVector {
    TileId id;
    std::vector<double> values;
};

/// Fixed-dimension vectors keyed by tile. Every insertion is checked for
/// arity, finiteness and uniqueness.
class FeatureSet {
public:
    FeatureSet(std::size_t dimension, std::string source);

    std::size_t dimension() const noexcept { return dimension_; }
    const std::string& source() const noexcept { return source_; }
    std::size_t size() const noexcept { return vectors_.size(); }

    /// Throws DataError on wrong length, non-finite values or a duplicate id.
    void add(TileId id, std::vector<double> values);

    /// nullptr when absent.
    const std::vector<double>* find(const TileId& id) const noexcept;

    const std::map<TileId, std::vector<double>>& vectors() const noexcept { return vectors_; }

    friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

private:
    std::size_t dimension_;
    std::string source_;
    std::map<TileId, std::vector<double>> vectors_;
};

// Embedding interchange CSV:
//
//   # source=<model-id> dim=<d> [key=value ...]
//   row,col,f0,f1,...,f{d-1}
//   <row>,<col>,<v0>,...,<v{d-1}>
//
// Extra key=value pairs in the comment are ignored; further '#' lines are skipped.
FeatureSet parse_embeddings(std::string_view text);
FeatureSet load_embeddings(const std::filesystem::path& path);
std::string embeddings_csv(const FeatureSet& features);
void write_embeddings(const FeatureSet& features, const std::filesystem::path& path);

inline constexpr std::size_t kHistogramBins = 8;
inline constexpr std::size_t kBaselineStatsPerBand = 4 + kHistogramBins;

struct BandRange {
    double min = 0.0;
    double max = 0.0;
};

/// Global [min, max] of valid pixels of each named band.
std::vector<BandRange> band_ranges(const Raster& raster, std::span<const std::string> bands);

/// Per band: mean, standard deviation (population), min, max, then the
/// fraction of pixels in each of 8 equal bins over the band's global range.
/// Pixels are those centered in the tile. Throws DataError if none is valid.
std::vector<double> baseline_features(const Raster& raster, const Rect& tile,
                                      std::span<const std::string> bands,
                                      std::span<const BandRange> ranges);

/// Convenience form over all bands, with ranges taken from the whole raster.
std::vector<double> baseline_features(const Raster& raster, const Rect& tile);

/// Baseline vectors for the given tiles; source "baseline".
FeatureSet extract_baseline(const Raster& raster, const TileGrid& grid,
                            std::span<const TileId> tiles, unsigned threads = 0,
                            std::vector<std::string> bands = {});

struct DesignMatrix {
    Matrix x;
    std::vector<int> y; // 1 = favela (positive), 0 = nonfavela
    std::vector<TileId> ids;
    std::size_t ignored_features = 0; // feature rows with no dataset tile
};

/// Joins labeled tiles with their vectors, rows ordered by (row, col).
/// Throws DataError listing up to 20 tiles that have no vector.
DesignMatrix assemble(const std::vector<TileRecord>& tiles, const FeatureSet& features);

} // namespace favmap
