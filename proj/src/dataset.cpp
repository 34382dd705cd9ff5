#include "favmap/dataset.hpp"

#include "favmap/error.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace favmap {

using nlohmann::ordered_json;

std::string to_string(const TileId& id)
{
    return "(" + std::to_string(id.row) + "," + std::to_string(id.col) + ")";
}

Rect TileGrid::extent() const noexcept
{
    return {origin_x, origin_y - static_cast<double>(n_rows) * tile_size,
            origin_x + static_cast<double>(n_cols) * tile_size, origin_y};
}

TileGrid make_grid(const Rect& extent, double tile_size)
{
    validate(extent);
    if (!(tile_size > 0.0) || !std::isfinite(tile_size))
        throw InvalidArgument("tile_size must be positive");
    auto count = [&](double span) {
        // Relative slack so that 300 / 150 stays 2 despite rounding noise.
        const double q = span / tile_size;
        return static_cast<std::size_t>(std::max(1.0, std::ceil(q - 1e-9 * std::max(1.0, q))));
    };
    TileGrid g;
    g.origin_x = extent.min_x;
    g.origin_y = extent.max_y;
    g.tile_size = tile_size;
    g.n_cols = count(extent.width());
    g.n_rows = count(extent.height());
    return g;
}

Rect tile_extent(const TileGrid& grid, std::size_t row, std::size_t col)
{
    if (row >= grid.n_rows || col >= grid.n_cols)
        throw InvalidArgument("tile " + to_string(TileId{row, col}) + " outside " +
                              std::to_string(grid.n_rows) + "x" + std::to_string(grid.n_cols) +
                              " grid");
    const double s = grid.tile_size;
    return {grid.origin_x + static_cast<double>(col) * s,
            grid.origin_y - static_cast<double>(row + 1) * s,
            grid.origin_x + static_cast<double>(col + 1) * s,
            grid.origin_y - static_cast<double>(row) * s};
}

void validate(const LabelRules& rules)
{
    auto check = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0))
            throw InvalidArgument(std::string(name) + " must lie in [0, 1]");
    };
    check(rules.building_min, "building_min");
    check(rules.veg_max, "veg_max");
    check(rules.favela_min, "favela_min");
    check(rules.ndvi_threshold, "ndvi_threshold");
    if (!(rules.favela_min > 0.0))
        throw InvalidArgument("favela_min must be positive");
}

std::string_view to_string(Label label) noexcept
{
    switch (label) {
    case Label::unset: return "unset";
    case Label::favela: return "favela";
    case Label::nonfavela: return "nonfavela";
    case Label::discarded: return "discarded";
    }
    return "?";
}

std::string_view to_string(DiscardReason reason) noexcept
{
    switch (reason) {
    case DiscardReason::low_building: return "low_building";
    case DiscardReason::high_vegetation: return "high_vegetation";
    case DiscardReason::industrial: return "industrial";
    case DiscardReason::ambiguous: return "ambiguous";
    }
    return "?";
}

FilterResult apply_filters(const TileRecord& record, const LabelRules& rules)
{
    FilterResult out;
    if (record.building_prop < rules.building_min)
        out.reasons.push_back(DiscardReason::low_building);
    if (record.veg_prop > rules.veg_max)
        out.reasons.push_back(DiscardReason::high_vegetation);
    if (record.industrial)
        out.reasons.push_back(DiscardReason::industrial);
    out.kept = out.reasons.empty();
    return out;
}

Label assign_label(const TileRecord& record, const LabelRules& rules)
{
    if (record.favela_prop >= rules.favela_min)
        return Label::favela;
    if (record.favela_prop == 0.0)
        return Label::nonfavela;
    return Label::discarded;
}

void classify(TileRecord& record, const LabelRules& rules)
{
    FilterResult f = apply_filters(record, rules);
    if (!f.kept) {
        record.label = Label::discarded;
        record.reasons = std::move(f.reasons);
        return;
    }
    record.label = assign_label(record, rules);
    record.reasons.clear();
    if (record.label == Label::discarded)
        record.reasons.push_back(DiscardReason::ambiguous);
}

namespace {

// Bounding boxes of each polygon so tiles only clip against nearby ones.
class PolygonIndex {
public:
    explicit PolygonIndex(const MultiPolygon& mp) : mp_(mp)
    {
        boxes_.reserve(mp.polygons.size());
        for (const Polygon& p : mp.polygons)
            boxes_.push_back(bounding_box(p.exterior.vertices));
    }

    double covered_area(const Rect& rect) const
    {
        double total = 0.0;
        for (std::size_t i = 0; i < boxes_.size(); ++i) {
            if (!boxes_[i].intersects(rect))
                continue;
            const Polygon& poly = mp_.polygons[i];
            const std::vector<Point> ext = clip_ring_to_rect(poly.exterior.vertices, rect);
            if (ext.empty())
                continue;
            double a = std::abs(ring_area(ext));
            for (const PolygonRing& hole : poly.holes)
                a -= std::abs(ring_area(clip_ring_to_rect(hole.vertices, rect)));
            total += a;
        }
        return total;
    }

private:
    const MultiPolygon& mp_;
    std::vector<Rect> boxes_;
};

std::string id_list(const std::vector<TileId>& ids, std::size_t limit = 20)
{
    std::string s;
    for (std::size_t i = 0; i < ids.size() && i < limit; ++i) {
        if (i)
            s += ' ';
        s += to_string(ids[i]);
    }
    if (ids.size() > limit)
        s += " ... (" + std::to_string(ids.size()) + " total)";
    return s;
}

} // namespace

TileStats compute_tile_stats(const TileGrid& grid, const StatsLayers& layers,
                             const LabelRules& rules, unsigned threads)
{
    validate(rules);
    validate(layers.ndvi);
    validate(layers.buildings);
    layers.ndvi.band(layers.ndvi_band);
    layers.buildings.band(layers.building_band);

    const PolygonIndex favelas(layers.favelas);
    const PolygonIndex industrial(layers.industrial);
    const Threshold is_vegetation{Threshold::Op::ge, rules.ndvi_threshold};

    struct Slot {
        TileRecord record;
        bool uncovered = false;
        bool partial = false;
    };
    std::vector<Slot> slots(grid.size());

    detail::parallel_for(grid.size(), threads, [&](std::size_t i) {
        const std::size_t row = i / grid.n_cols, col = i % grid.n_cols;
        const Rect rect = tile_extent(grid, row, col);
        Slot& s = slots[i];
        s.record.id = {row, col};
        s.record.favela_prop = std::clamp(favelas.covered_area(rect) / rect.area(), 0.0, 1.0);
        s.record.industrial = industrial.covered_area(rect) > 0.0;

        const PixelFraction veg =
            pixel_fraction(layers.ndvi, layers.ndvi_band, rect, is_vegetation);
        const PixelMean built = pixel_mean(layers.buildings, layers.building_band, rect);
        s.record.veg_prop = veg.fraction;
        s.record.building_prop = std::clamp(built.mean, 0.0, 1.0);
        s.uncovered = veg.empty || built.empty;
        s.partial = veg.missing > 0 || built.missing > 0;
    });

    TileStats out;
    out.records.reserve(slots.size());
    std::vector<TileId> uncovered, partial;
    for (Slot& s : slots) {
        if (s.uncovered)
            uncovered.push_back(s.record.id);
        else if (s.partial)
            partial.push_back(s.record.id);
        out.records.push_back(std::move(s.record));
    }
    if (!uncovered.empty())
        throw DataError("rasters do not cover " + std::to_string(uncovered.size()) +
                        " tile(s): " + id_list(uncovered));
    if (!partial.empty())
        out.warnings.push_back(std::to_string(partial.size()) +
                               " tile(s) extend past the raster data; statistics use the "
                               "available pixels: " +
                               id_list(partial));
    return out;
}

LabeledDataset summarize(const TileGrid& grid, std::vector<TileRecord> records,
                         const LabelRules& rules, std::vector<std::string> warnings)
{
    validate(rules);
    std::sort(records.begin(), records.end(),
              [](const TileRecord& a, const TileRecord& b) { return a.id < b.id; });

    LabeledDataset ds;
    Provenance& p = ds.provenance;
    p.grid = grid;
    p.rules = rules;
    p.total_tiles = records.size();
    p.warnings = std::move(warnings);
    for (TileRecord& r : records) {
        classify(r, rules);
        switch (r.label) {
        case Label::favela: ++p.favela; break;
        case Label::nonfavela: ++p.nonfavela; break;
        default: break;
        }
        if (r.label != Label::discarded) {
            ds.tiles.push_back(std::move(r));
            continue;
        }
        for (DiscardReason reason : r.reasons) {
            switch (reason) {
            case DiscardReason::low_building: ++p.removed_low_building; break;
            case DiscardReason::high_vegetation: ++p.removed_high_vegetation; break;
            case DiscardReason::industrial: ++p.removed_industrial; break;
            case DiscardReason::ambiguous: ++p.ambiguous; break;
            }
        }
        if (r.reasons.front() != DiscardReason::ambiguous)
            ++p.removed;
    }
    if (p.favela > 0)
        p.imbalance_ratio = static_cast<double>(p.nonfavela) / static_cast<double>(p.favela);
    return ds;
}

LabeledDataset build_dataset(const TileGrid& grid, const StatsLayers& layers,
                             const LabelRules& rules, unsigned threads)
{
    TileStats stats = compute_tile_stats(grid, layers, rules, threads);
    return summarize(grid, std::move(stats.records), rules, std::move(stats.warnings));
}

LabeledDataset build_dataset_from_files(const DatasetInputs& inputs, const LabelRules& rules,
                                        unsigned threads)
{
    validate(rules);
    Raster imagery = read_raster(inputs.imagery);
    if (!imagery.find_band("ndvi"))
        add_ndvi_band(imagery, inputs.red_band, inputs.nir_band);
    const Raster buildings = read_raster(inputs.buildings);
    const MultiPolygon favelas = read_geojson_polygons(inputs.favelas);
    const MultiPolygon industrial = read_geojson_polygons(inputs.industrial);

    const TileGrid grid = make_grid(inputs.extent.value_or(imagery.extent()), inputs.tile_size);
    StatsLayers layers{favelas, imagery, buildings, industrial};
    layers.building_band = inputs.building_band;
    LabeledDataset ds = build_dataset(grid, layers, rules, threads);
    ds.provenance.inputs = {{"imagery", inputs.imagery.string()},
                            {"buildings", inputs.buildings.string()},
                            {"favelas", inputs.favelas.string()},
                            {"industrial", inputs.industrial.string()}};
    return ds;
}

namespace {

constexpr std::string_view kDatasetHeader =
    "row,col,favela_prop,veg_prop,building_prop,industrial,label";

} // namespace

std::string dataset_csv(const std::vector<TileRecord>& tiles)
{
    std::string out(kDatasetHeader);
    out += '\n';
    for (const TileRecord& t : tiles) {
        if (t.label != Label::favela && t.label != Label::nonfavela)
            throw InvalidArgument("dataset CSV holds labeled tiles only; tile " +
                                  to_string(t.id) + " is " + std::string(to_string(t.label)));
        out += std::to_string(t.id.row) + ',' + std::to_string(t.id.col) + ',' +
               detail::format_double(t.favela_prop) + ',' + detail::format_double(t.veg_prop) +
               ',' + detail::format_double(t.building_prop) + ',' + (t.industrial ? "1" : "0") +
               ',' + std::string(to_string(t.label)) + '\n';
    }
    return out;
}

void write_dataset_csv(const std::vector<TileRecord>& tiles, const std::filesystem::path& path)
{
    detail::write_text_file(path, dataset_csv(tiles));
}

std::vector<TileRecord> parse_dataset_csv(std::string_view text)
{
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || detail::strip_eol(line) != kDatasetHeader)
        throw DataError("dataset CSV must start with '" + std::string(kDatasetHeader) + "'");

    std::vector<TileRecord> tiles;
    std::set<TileId> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = detail::strip_eol(line);
        if (detail::trim(body).empty())
            continue;
        const auto f = detail::split_csv(body);
        try {
            if (f.size() != 7)
                throw Error("expected 7 fields, got " + std::to_string(f.size()));
            TileRecord t;
            t.id = {detail::parse_size(f[0]), detail::parse_size(f[1])};
            t.favela_prop = detail::parse_double(f[2]);
            t.veg_prop = detail::parse_double(f[3]);
            t.building_prop = detail::parse_double(f[4]);
            for (double v : {t.favela_prop, t.veg_prop, t.building_prop})
                if (!(v >= 0.0 && v <= 1.0))
                    throw Error("proportion outside [0, 1]");
            if (f[5] == "1" || f[5] == "true")
                t.industrial = true;
            else if (f[5] != "0" && f[5] != "false")
                throw Error("industrial must be 0 or 1");
            if (f[6] == "favela")
                t.label = Label::favela;
            else if (f[6] == "nonfavela")
                t.label = Label::nonfavela;
            else
                throw Error("label must be favela or nonfavela");
            if (!seen.insert(t.id).second)
                throw Error("duplicate tile " + to_string(t.id));
            tiles.push_back(std::move(t));
        } catch (const Error& e) {
            throw DataError("dataset CSV line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    std::sort(tiles.begin(), tiles.end(),
              [](const TileRecord& a, const TileRecord& b) { return a.id < b.id; });
    return tiles;
}

std::vector<TileRecord> read_dataset_csv(const std::filesystem::path& path)
{
    const std::string text = detail::read_text_file(path);
    try {
        return parse_dataset_csv(text);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string provenance_json(const Provenance& p)
{
    ordered_json j;
    j["grid"] = {{"origin_x", p.grid.origin_x},   {"origin_y", p.grid.origin_y},
                 {"tile_size", p.grid.tile_size}, {"n_cols", p.grid.n_cols},
                 {"n_rows", p.grid.n_rows}};
    j["rules"] = {{"building_min", p.rules.building_min},
                  {"veg_max", p.rules.veg_max},
                  {"favela_min", p.rules.favela_min},
                  {"ndvi_threshold", p.rules.ndvi_threshold}};
    j["inputs"] = ordered_json::object();
    for (const auto& [k, v] : p.inputs)
        j["inputs"][k] = v;
    j["counts"] = {{"total_tiles", p.total_tiles},
                   {"removed", p.removed},
                   {"removed_low_building", p.removed_low_building},
                   {"removed_high_vegetation", p.removed_high_vegetation},
                   {"removed_industrial", p.removed_industrial},
                   {"ambiguous", p.ambiguous},
                   {"favela", p.favela},
                   {"nonfavela", p.nonfavela}};
    j["imbalance_ratio"] = p.imbalance_ratio ? ordered_json(*p.imbalance_ratio) : ordered_json();
    j["warnings"] = p.warnings;
    return j.dump(2) + "\n";
}

void write_provenance(const Provenance& prov, const std::filesystem::path& path)
{
    detail::write_text_file(path, provenance_json(prov));
}

Provenance read_provenance(const std::filesystem::path& path)
{
    const std::string text = detail::read_text_file(path);
    try {
        const auto j = ordered_json::parse(text);
        Provenance p;
        const auto& g = j.at("grid");
        p.grid.origin_x = g.at("origin_x").get<double>();
        p.grid.origin_y = g.at("origin_y").get<double>();
        p.grid.tile_size = g.at("tile_size").get<double>();
        p.grid.n_cols = g.at("n_cols").get<std::size_t>();
        p.grid.n_rows = g.at("n_rows").get<std::size_t>();
        const auto& r = j.at("rules");
        p.rules.building_min = r.at("building_min").get<double>();
        p.rules.veg_max = r.at("veg_max").get<double>();
        p.rules.favela_min = r.at("favela_min").get<double>();
        p.rules.ndvi_threshold = r.at("ndvi_threshold").get<double>();
        if (j.contains("inputs"))
            for (const auto& [k, v] : j.at("inputs").items())
                p.inputs.emplace_back(k, v.get<std::string>());
        const auto& c = j.at("counts");
        p.total_tiles = c.at("total_tiles").get<std::size_t>();
        p.removed = c.at("removed").get<std::size_t>();
        p.removed_low_building = c.at("removed_low_building").get<std::size_t>();
        p.removed_high_vegetation = c.at("removed_high_vegetation").get<std::size_t>();
        p.removed_industrial = c.at("removed_industrial").get<std::size_t>();
        p.ambiguous = c.at("ambiguous").get<std::size_t>();
        p.favela = c.at("favela").get<std::size_t>();
        p.nonfavela = c.at("nonfavela").get<std::size_t>();
        if (!j.at("imbalance_ratio").is_null())
            p.imbalance_ratio = j.at("imbalance_ratio").get<double>();
        p.warnings = j.at("warnings").get<std::vector<std::string>>();
        if (!(p.grid.tile_size > 0.0) || p.grid.n_cols == 0 || p.grid.n_rows == 0)
            throw DataError("invalid grid");
        return p;
    } catch (const ordered_json::exception& e) {
        throw DataError(path.string() + ": malformed provenance JSON: " + e.what());
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::vector<GeoFeature> tile_features(const TileGrid& grid, const std::vector<TileRecord>& tiles)
{
    std::vector<GeoFeature> out;
    out.reserve(tiles.size());
    for (const TileRecord& t : tiles) {
        const Rect r = tile_extent(grid, t.id.row, t.id.col);
        GeoFeature f;
        f.geometry.polygons.push_back(Polygon{
            PolygonRing{{{r.min_x, r.min_y}, {r.max_x, r.min_y}, {r.max_x, r.max_y}, {r.min_x, r.max_y}}},
            {}});
        f.properties = {{"row", static_cast<long long>(t.id.row)},
                        {"col", static_cast<long long>(t.id.col)},
                        {"favela_prop", t.favela_prop},
                        {"veg_prop", t.veg_prop},
                        {"building_prop", t.building_prop},
                        {"industrial", t.industrial},
                        {"label", std::string(to_string(t.label))}};
        out.push_back(std::move(f));
    }
    return out;
}

} // namespace favmap
