#include "favmap/features.hpp"

#include "favmap/error.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "text.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace favmap {

FeatureSet::FeatureSet(std::size_t dimension, std::string source)
    : dimension_(dimension), source_(std::move(source))
{
    if (dimension_ == 0)
        throw InvalidArgument("feature dimension must be positive");
}

void FeatureSet::add(TileId id, std::vector<double> values)
{
    if (values.size() != dimension_)
        throw DataError("tile " + to_string(id) + " has " + std::to_string(values.size()) +
                        " values, expected " + std::to_string(dimension_));
    for (double v : values)
        if (!std::isfinite(v))
            throw DataError("tile " + to_string(id) + " has a non-finite value");
    if (!vectors_.emplace(id, std::move(values)).second)
        throw DataError("duplicate tile " + to_string(id));
}

const std::vector<double>* FeatureSet::find(const TileId& id) const noexcept
{
    auto it = vectors_.find(id);
    return it == vectors_.end() ? nullptr : &it->second;
}

FeatureSet parse_embeddings(std::string_view text)
{
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;

    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!detail::trim(detail::strip_eol(line)).empty())
                return true;
        }
        return false;
    };

    if (!next_line() || line.rfind('#', 0) != 0)
        throw DataError("embeddings: first line must be '# source=<model-id> dim=<d>'");
    std::string source;
    std::size_t dim = 0;
    bool have_source = false, have_dim = false;
    {
        std::istringstream fields(line.substr(1));
        std::string tok;
        while (fields >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos)
                continue;
            const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
            if (key == "source") {
                source = value;
                have_source = true;
            } else if (key == "dim") {
                try {
                    dim = detail::parse_size(value);
                } catch (const Error&) {
                    throw DataError("embeddings: invalid dim '" + value + "'");
                }
                have_dim = true;
            }
        }
    }
    if (!have_source || !have_dim || dim == 0)
        throw DataError("embeddings: header comment needs source=<id> and dim=<d> (d > 0)");

    do {
        if (!next_line())
            throw DataError("embeddings: missing column header");
    } while (line.rfind('#', 0) == 0);
    {
        const auto cols = detail::split_csv(detail::strip_eol(line));
        if (cols.size() != dim + 2 || cols[0] != "row" || cols[1] != "col")
            throw DataError("embeddings: column header must be row,col,f0..f" +
                            std::to_string(dim - 1));
        for (std::size_t i = 0; i < dim; ++i)
            if (cols[i + 2] != "f" + std::to_string(i))
                throw DataError("embeddings: column " + std::to_string(i + 2) + " should be f" +
                                std::to_string(i));
    }

    FeatureSet fs(dim, source);
    while (next_line()) {
        if (line.rfind('#', 0) == 0)
            continue;
        const auto f = detail::split_csv(detail::strip_eol(line));
        try {
            if (f.size() != dim + 2)
                throw DataError("expected " + std::to_string(dim) + " values, got " +
                                std::to_string(f.size() < 2 ? 0 : f.size() - 2));
            TileId id{detail::parse_size(f[0]), detail::parse_size(f[1])};
            std::vector<double> values(dim);
            for (std::size_t i = 0; i < dim; ++i)
                values[i] = detail::parse_double(f[i + 2]);
            fs.add(id, std::move(values));
        } catch (const Error& e) {
            throw DataError("embeddings line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return fs;
}

FeatureSet load_embeddings(const std::filesystem::path& path)
{
    const std::string text = detail::read_text_file(path);
    try {
        return parse_embeddings(text);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string embeddings_csv(const FeatureSet& features)
{
    std::string out = "# source=" + features.source() +
                      " dim=" + std::to_string(features.dimension()) + "\nrow,col";
    for (std::size_t i = 0; i < features.dimension(); ++i)
        out += ",f" + std::to_string(i);
    out += '\n';
    for (const auto& [id, values] : features.vectors()) {
        out += std::to_string(id.row) + ',' + std::to_string(id.col);
        for (double v : values)
            out += ',' + detail::format_double(v);
        out += '\n';
    }
    return out;
}

void write_embeddings(const FeatureSet& features, const std::filesystem::path& path)
{
    detail::write_text_file(path, embeddings_csv(features));
}

std::vector<BandRange> band_ranges(const Raster& raster, std::span<const std::string> bands)
{
    std::vector<BandRange> out;
    for (const std::string& name : bands) {
        const Band& band = raster.band(name);
        BandRange r{std::numeric_limits<double>::infinity(),
                    -std::numeric_limits<double>::infinity()};
        for (float v : band.values) {
            if (raster.is_nodata(v))
                continue;
            r.min = std::min(r.min, static_cast<double>(v));
            r.max = std::max(r.max, static_cast<double>(v));
        }
        if (r.min > r.max)
            throw DataError("band '" + name + "' has no valid pixels");
        out.push_back(r);
    }
    return out;
}

std::vector<double> baseline_features(const Raster& raster, const Rect& tile,
                                      std::span<const std::string> bands,
                                      std::span<const BandRange> ranges)
{
    if (bands.size() != ranges.size())
        throw InvalidArgument("baseline_features: one range per band required");
    const PixelWindow win = pixel_window(raster, tile);
    std::vector<double> out;
    out.reserve(bands.size() * kBaselineStatsPerBand);
    std::vector<double> vals;
    vals.reserve(win.size());

    for (std::size_t b = 0; b < bands.size(); ++b) {
        const Band& band = raster.band(bands[b]);
        vals.clear();
        for (std::size_t r = win.row_begin; r < win.row_end; ++r)
            for (std::size_t c = win.col_begin; c < win.col_end; ++c) {
                const float v = band.values[r * raster.width + c];
                if (!raster.is_nodata(v))
                    vals.push_back(v);
            }
        if (vals.empty())
            throw DataError("no valid '" + bands[b] + "' pixels in tile");

        const double n = static_cast<double>(vals.size());
        double sum = 0.0, lo = vals[0], hi = vals[0];
        for (double v : vals) {
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double mean = sum / n;
        double ss = 0.0;
        for (double v : vals)
            ss += (v - mean) * (v - mean);

        std::array<double, kHistogramBins> hist{};
        const double g_lo = ranges[b].min, g_span = ranges[b].max - ranges[b].min;
        for (double v : vals) {
            std::size_t bin = 0;
            if (g_span > 0.0) {
                const double pos = std::floor((v - g_lo) / g_span * kHistogramBins);
                bin = static_cast<std::size_t>(
                    std::clamp(pos, 0.0, static_cast<double>(kHistogramBins - 1)));
            }
            hist[bin] += 1.0;
        }

        out.push_back(mean);
        out.push_back(std::sqrt(ss / n));
        out.push_back(lo);
        out.push_back(hi);
        for (double h : hist)
            out.push_back(h / n);
    }
    return out;
}

std::vector<double> baseline_features(const Raster& raster, const Rect& tile)
{
    std::vector<std::string> names;
    for (const Band& b : raster.bands)
        names.push_back(b.name);
    const auto ranges = band_ranges(raster, names);
    return baseline_features(raster, tile, names, ranges);
}

FeatureSet extract_baseline(const Raster& raster, const TileGrid& grid,
                            std::span<const TileId> tiles, unsigned threads,
                            std::vector<std::string> bands)
{
    validate(raster);
    if (bands.empty())
        for (const Band& b : raster.bands)
            bands.push_back(b.name);
    const auto ranges = band_ranges(raster, bands);

    std::vector<std::vector<double>> rows(tiles.size());
    detail::parallel_for(tiles.size(), threads, [&](std::size_t i) {
        const Rect rect = tile_extent(grid, tiles[i].row, tiles[i].col);
        try {
            rows[i] = baseline_features(raster, rect, bands, ranges);
        } catch (const DataError& e) {
            throw DataError("tile " + to_string(tiles[i]) + ": " + e.what());
        }
    });

    FeatureSet fs(bands.size() * kBaselineStatsPerBand, "baseline");
    for (std::size_t i = 0; i < tiles.size(); ++i)
        fs.add(tiles[i], std::move(rows[i]));
    return fs;
}

DesignMatrix assemble(const std::vector<TileRecord>& tiles, const FeatureSet& features)
{
    std::vector<const TileRecord*> order;
    order.reserve(tiles.size());
    for (const TileRecord& t : tiles) {
        if (t.label != Label::favela && t.label != Label::nonfavela)
            throw InvalidArgument("assemble: tile " + to_string(t.id) + " is not labeled");
        order.push_back(&t);
    }
    std::sort(order.begin(), order.end(),
              [](const TileRecord* a, const TileRecord* b) { return a->id < b->id; });

    std::vector<TileId> missing;
    for (const TileRecord* t : order)
        if (!features.find(t->id))
            missing.push_back(t->id);
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i)
            list += (i ? " " : "") + to_string(missing[i]);
        if (missing.size() > 20)
            list += " ...";
        throw DataError(std::to_string(missing.size()) + " labeled tile(s) have no feature vector: " +
                        list);
    }

    const std::size_t d = features.dimension();
    DesignMatrix dm;
    dm.x = Matrix(order.size(), d);
    dm.y.reserve(order.size());
    dm.ids.reserve(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& v = *features.find(order[i]->id);
        std::copy(v.begin(), v.end(), dm.x.row(i).begin());
        dm.y.push_back(order[i]->label == Label::favela ? 1 : 0);
        dm.ids.push_back(order[i]->id);
    }
    dm.ignored_features = features.size() - order.size();
    return dm;
}

} // namespace favmap
