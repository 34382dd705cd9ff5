#include "favmap/synthcity.hpp"

#include "favmap/error.hpp"
#include "favmap/geojson.hpp"
#include "favmap/rng.hpp"
#include "io.hpp"
#include "text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace favmap {

namespace {

enum class Role : unsigned char { free, margin, favela, fringe, industrial, park, sparse };

// Surface reflectances (red, nir) before brightness noise.
constexpr float kBuiltRed = 0.30f, kBuiltNir = 0.35f;
constexpr float kVegRed = 0.05f, kVegNir = 0.50f;

struct Block {
    std::size_t rows, cols;
};

// Rectangle covering tiles [r0, r1) x [c0, c1), built from tile_extent so its
// edges coincide bit-for-bit with the tile edges.
Rect block_rect(const TileGrid& g, std::size_t r0, std::size_t c0, std::size_t r1, std::size_t c1)
{
    const Rect top_left = tile_extent(g, r0, c0);
    const Rect bottom_right = tile_extent(g, r1 - 1, c1 - 1);
    return {top_left.min_x, bottom_right.min_y, bottom_right.max_x, top_left.max_y};
}

Polygon rect_polygon(const Rect& r)
{
    return Polygon{PolygonRing{{{r.min_x, r.min_y}, {r.max_x, r.min_y}, {r.max_x, r.max_y},
                                {r.min_x, r.max_y}}},
                   {}};
}

double overlap(const Rect& a, const Rect& b)
{
    const double w = std::min(a.max_x, b.max_x) - std::max(a.min_x, b.min_x);
    const double h = std::min(a.max_y, b.max_y) - std::max(a.min_y, b.min_y);
    return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

struct FavelaShape {
    std::size_t tiles;     // core tile count
    std::size_t width;     // tiles per full row
    std::size_t full_rows; // rows of the main rectangle
    std::size_t rem;       // tiles in the partial row under it
};

FavelaShape shape_for(std::size_t tiles)
{
    FavelaShape s;
    s.tiles = tiles;
    s.width = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(tiles))));
    s.full_rows = tiles / s.width;
    s.rem = tiles % s.width;
    return s;
}

std::vector<FavelaShape> favela_shapes(std::size_t total, std::size_t n)
{
    std::vector<FavelaShape> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(shape_for(total / n + (i < total % n ? 1 : 0)));
    return out;
}

// Pixel-rectangle in pixel coordinates, [r0, r1) x [c0, c1).
struct PixelRect {
    std::size_t r0 = 0, c0 = 0, r1 = 0, c1 = 0;
    bool contains(std::size_t r, std::size_t c) const noexcept
    {
        return r >= r0 && r < r1 && c >= c0 && c < c1;
    }
};

std::size_t draw_between(Rng& rng, std::size_t lo, std::size_t hi) // inclusive
{
    return lo + uniform_index(rng, hi - lo + 1);
}

double draw_real(Rng& rng, double lo, double hi)
{
    return lo + (hi - lo) * uniform_real(rng);
}

} // namespace

void validate(const ScenarioConfig& cfg)
{
    validate(cfg.extent);
    if (!(cfg.pixel_size > 0.0) || !(cfg.tile_size > 0.0))
        throw InvalidArgument("pixel_size and tile_size must be positive");
    const double ratio = cfg.tile_size / cfg.pixel_size;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 2.0)
        throw InvalidArgument("tile_size must be a multiple (>= 2) of pixel_size");
    if (!(cfg.favela_texture_std >= 0.0) || !(cfg.formal_texture_std >= 0.0))
        throw InvalidArgument("texture stds must be nonnegative");
    if (cfg.favela_texture_std == cfg.formal_texture_std)
        throw InvalidArgument("favela and formal texture stds must differ");
    if (!(cfg.target_imbalance >= 1.0))
        throw InvalidArgument("target_imbalance must be at least 1");
}

MultiPolygon Scenario::all_favelas() const
{
    MultiPolygon mp;
    for (const MultiPolygon& f : favelas)
        mp.polygons.insert(mp.polygons.end(), f.polygons.begin(), f.polygons.end());
    return mp;
}

Scenario generate(const ScenarioConfig& cfg)
{
    validate(cfg);
    Scenario sc;
    sc.config = cfg;
    sc.grid = make_grid(cfg.extent, cfg.tile_size);
    const TileGrid& g = sc.grid;
    if (g.n_rows < 4 || g.n_cols < 4)
        throw InvalidArgument("synthetic city needs at least 4x4 tiles");

    const double ps = cfg.pixel_size, ts = cfg.tile_size;
    const std::size_t tpx = static_cast<std::size_t>(std::llround(ts / ps));
    const std::size_t n_tiles = g.size();
    Rng rng(cfg.seed);

    std::vector<Role> role(n_tiles, Role::free);
    auto at = [&](std::size_t r, std::size_t c) -> Role& { return role[r * g.n_cols + c]; };
    auto block_free = [&](std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) {
        if (r0 + rows > g.n_rows || c0 + cols > g.n_cols)
            return false;
        for (std::size_t r = r0; r < r0 + rows; ++r)
            for (std::size_t c = c0; c < c0 + cols; ++c)
                if (at(r, c) != Role::free)
                    return false;
        return true;
    };

    // Removed-tile budget, drawn before favela sizing so the imbalance target
    // accounts for it.
    std::vector<Block> industrial_blocks, park_blocks;
    for (std::size_t i = 0; i < std::max<std::size_t>(1, n_tiles / 300); ++i)
        industrial_blocks.push_back({draw_between(rng, 1, 3), draw_between(rng, 1, 2)});
    for (std::size_t i = 0; i < std::max<std::size_t>(1, n_tiles / 250); ++i)
        park_blocks.push_back({draw_between(rng, 1, 2), draw_between(rng, 1, 3)});
    const std::size_t n_sparse = n_tiles / 25;
    std::size_t removed = n_sparse;
    for (const Block& b : industrial_blocks)
        removed += b.rows * b.cols;
    for (const Block& b : park_blocks)
        removed += b.rows * b.cols;
    if (removed >= n_tiles)
        throw DataError("grid too small for the synthetic layout");

    // Favela tile budget: labeled = total - removed - fringe, and
    // nonfavela / favela should equal the target.
    std::vector<FavelaShape> shapes;
    if (cfg.n_favelas > 0) {
        std::size_t fringe = 0;
        std::size_t favela_tiles = 0;
        for (int iter = 0; iter < 4; ++iter) {
            const double labeled = static_cast<double>(n_tiles - removed) -
                                   static_cast<double>(fringe);
            favela_tiles =
                static_cast<std::size_t>(std::llround(labeled / (cfg.target_imbalance + 1.0)));
            if (favela_tiles < cfg.n_favelas)
                throw DataError("imbalance " + detail::format_double(cfg.target_imbalance) +
                                " is infeasible with " + std::to_string(cfg.n_favelas) +
                                " favelas on a " + std::to_string(g.n_rows) + "x" +
                                std::to_string(g.n_cols) + " grid");
            shapes = favela_shapes(favela_tiles, cfg.n_favelas);
            fringe = 0;
            for (const FavelaShape& s : shapes)
                fringe += s.full_rows;
        }
    }

    const double snap_max_raise = std::floor(0.3 * ts / ps) * ps;
    const std::size_t raise_steps = static_cast<std::size_t>(std::llround(snap_max_raise / ps));
    const std::size_t fringe_min = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.15 * ts / ps)));
    const std::size_t fringe_max = std::max(fringe_min, static_cast<std::size_t>(std::floor(0.45 * ts / ps)));

    std::vector<Rect> favela_exteriors, favela_holes;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const FavelaShape& s = shapes[i];
        const std::size_t body_rows = s.full_rows + (s.rem > 0 ? 1 : 0);
        // Footprint: body plus fringe column, surrounded by a one-tile margin.
        const std::size_t fp_rows = body_rows + 2, fp_cols = s.width + 3;
        if (fp_rows > g.n_rows || fp_cols > g.n_cols)
            throw DataError("favela " + std::to_string(i) + " does not fit the grid; lower the imbalance or favela count");
        bool placed = false;
        for (int attempt = 0; attempt < 5000 && !placed; ++attempt) {
            const std::size_t r = uniform_index(rng, g.n_rows - fp_rows + 1);
            const std::size_t c = uniform_index(rng, g.n_cols - fp_cols + 1);
            if (!block_free(r, c, fp_rows, fp_cols))
                continue;
            placed = true;
            for (std::size_t rr = r; rr < r + fp_rows; ++rr)
                for (std::size_t cc = c; cc < c + fp_cols; ++cc)
                    at(rr, cc) = Role::margin;

            const std::size_t r0 = r + 1, c0 = c + 1;
            for (std::size_t rr = r0; rr < r0 + s.full_rows; ++rr) {
                for (std::size_t cc = c0; cc < c0 + s.width; ++cc)
                    at(rr, cc) = Role::favela;
                at(rr, c0 + s.width) = Role::fringe;
            }
            for (std::size_t cc = c0; cc < c0 + s.rem; ++cc)
                at(r0 + s.full_rows, cc) = Role::favela;

            Rect main = block_rect(g, r0, c0, r0 + s.full_rows, c0 + s.width);
            std::optional<Rect> under;
            if (s.rem > 0)
                under = block_rect(g, r0 + s.full_rows, c0, r0 + s.full_rows + 1, c0 + s.rem);
            // Raising the lowest edge by at most 30% keeps those tiles >= 70% covered.
            const double raise = static_cast<double>(uniform_index(rng, raise_steps + 1)) * ps;
            if (under)
                under->min_y += raise;
            else
                main.min_y += raise;
            const double fringe_w = static_cast<double>(draw_between(rng, fringe_min, fringe_max)) * ps;
            const Rect fringe{main.max_x, main.min_y, main.max_x + fringe_w, main.max_y};

            MultiPolygon favela;
            Polygon main_poly = rect_polygon(main);
            if (s.width >= 2 && s.full_rows >= 2) {
                const Rect corner = tile_extent(g, r0, c0);
                const double off = std::max(ps, std::round(ts / 3.0 / ps) * ps);
                const double side = std::max(ps, std::round(ts * 2.0 / 15.0 / ps) * ps);
                const Rect hole{corner.min_x + off, corner.max_y - off - side,
                                corner.min_x + off + side, corner.max_y - off};
                PolygonRing ring = rect_polygon(hole).exterior;
                std::reverse(ring.vertices.begin(), ring.vertices.end());
                main_poly.holes.push_back(std::move(ring));
                favela_holes.push_back(hole);
            }
            favela.polygons.push_back(std::move(main_poly));
            favela_exteriors.push_back(main);
            if (under) {
                favela.polygons.push_back(rect_polygon(*under));
                favela_exteriors.push_back(*under);
            }
            favela.polygons.push_back(rect_polygon(fringe));
            favela_exteriors.push_back(fringe);
            sc.favelas.push_back(std::move(favela));
        }
        if (!placed)
            throw DataError("could not place favela " + std::to_string(i) +
                            "; the requested imbalance is infeasible for this grid");
    }

    auto place_blocks = [&](const std::vector<Block>& blocks, Role what, auto&& on_place) {
        for (const Block& b : blocks) {
            for (int attempt = 0; attempt < 2000; ++attempt) {
                const std::size_t r = uniform_index(rng, g.n_rows - std::min(b.rows, g.n_rows) + 1);
                const std::size_t c = uniform_index(rng, g.n_cols - std::min(b.cols, g.n_cols) + 1);
                if (!block_free(r, c, b.rows, b.cols))
                    continue;
                for (std::size_t rr = r; rr < r + b.rows; ++rr)
                    for (std::size_t cc = c; cc < c + b.cols; ++cc)
                        at(rr, cc) = what;
                on_place(r, c, b);
                break;
            }
        }
    };

    std::vector<Rect> industrial_rects;
    place_blocks(industrial_blocks, Role::industrial,
                 [&](std::size_t r, std::size_t c, const Block& b) {
                     Rect zone = block_rect(g, r, c, r + b.rows, c + b.cols);
                     const double inset = std::min(10.0, ts / 10.0);
                     zone = {zone.min_x + inset, zone.min_y + inset, zone.max_x - inset,
                             zone.max_y - inset};
                     industrial_rects.push_back(zone);
                     sc.industrial.polygons.push_back(rect_polygon(zone));
                 });
    place_blocks(park_blocks, Role::park, [](std::size_t, std::size_t, const Block&) {});
    for (std::size_t placed = 0, attempt = 0; placed < n_sparse && attempt < 50 * n_sparse + 100;
         ++attempt) {
        const std::size_t i = uniform_index(rng, n_tiles);
        if (role[i] == Role::free) {
            role[i] = Role::sparse;
            ++placed;
        }
    }

    // Pixel layers.
    const std::size_t width = g.n_cols * tpx, height = g.n_rows * tpx;
    std::vector<float> red(width * height), nir(width * height), built(width * height);
    std::vector<unsigned char> veg(width * height, 0);

    std::vector<PixelRect> favela_px, hole_px;
    auto to_pixels = [&](const Rect& r) {
        return PixelRect{static_cast<std::size_t>(std::llround((g.origin_y - r.max_y) / ps)),
                         static_cast<std::size_t>(std::llround((r.min_x - g.origin_x) / ps)),
                         static_cast<std::size_t>(std::llround((g.origin_y - r.min_y) / ps)),
                         static_cast<std::size_t>(std::llround((r.max_x - g.origin_x) / ps))};
    };
    for (const Rect& r : favela_exteriors)
        favela_px.push_back(to_pixels(r));
    for (const Rect& r : favela_holes)
        hole_px.push_back(to_pixels(r));

    std::vector<double> tile_built(n_tiles, 0.0);
    for (std::size_t t = 0; t < n_tiles; ++t) {
        const std::size_t tr = t / g.n_cols, tc = t % g.n_cols;
        const std::size_t pr0 = tr * tpx, pc0 = tc * tpx;
        std::optional<PixelRect> patch;
        switch (role[t]) {
        case Role::favela: tile_built[t] = draw_real(rng, 0.85, 0.95); break;
        case Role::industrial: tile_built[t] = draw_real(rng, 0.6, 0.9); break;
        case Role::park: tile_built[t] = 0.0; break;
        case Role::sparse: tile_built[t] = draw_real(rng, 0.2, 0.4); break;
        default: tile_built[t] = draw_real(rng, 0.8, 0.95); break;
        }
        if (role[t] == Role::park) {
            patch = PixelRect{pr0, pc0, pr0 + tpx, pc0 + tpx};
        } else if ((role[t] == Role::free || role[t] == Role::margin ||
                    role[t] == Role::sparse) &&
                   uniform_real(rng) < 0.5) {
            // At most a quarter of the tile.
            const std::size_t max_side = std::max<std::size_t>(1, tpx / 2);
            const std::size_t h = draw_between(rng, 1, max_side), w = draw_between(rng, 1, max_side);
            const std::size_t r0 = pr0 + uniform_index(rng, tpx - h + 1);
            const std::size_t c0 = pc0 + uniform_index(rng, tpx - w + 1);
            patch = PixelRect{r0, c0, r0 + h, c0 + w};
        }
        if (patch)
            for (std::size_t r = patch->r0; r < patch->r1; ++r)
                for (std::size_t c = patch->c0; c < patch->c1; ++c)
                    veg[r * width + c] = 1;
    }

    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            const std::size_t i = r * width + c;
            bool in_favela = false;
            for (const PixelRect& p : favela_px)
                in_favela = in_favela || p.contains(r, c);
            for (const PixelRect& p : hole_px)
                in_favela = in_favela && !p.contains(r, c);
            const double sd = in_favela ? cfg.favela_texture_std : cfg.formal_texture_std;
            const double factor = std::clamp(1.0 + sd * standard_normal(rng), 0.05, 3.0);
            const bool v = veg[i] != 0;
            red[i] = static_cast<float>((v ? kVegRed : kBuiltRed) * factor);
            nir[i] = static_cast<float>((v ? kVegNir : kBuiltNir) * factor);
            const std::size_t t = (r / tpx) * g.n_cols + (c / tpx);
            built[i] = v ? 0.0f : static_cast<float>(tile_built[t]);
        }
    }

    for (Raster* ras : {&sc.imagery, &sc.buildings}) {
        ras->origin_x = g.origin_x;
        ras->origin_y = g.origin_y;
        ras->pixel_size = ps;
        ras->width = width;
        ras->height = height;
    }
    sc.imagery.add_band("red", std::move(red));
    sc.imagery.add_band("nir", std::move(nir));

    // Ground truth straight from the construction: rectangle overlaps for the
    // polygon layers, the vegetation mask and built values for the rasters.
    const LabelRules rules;
    const double tile_pixels = static_cast<double>(tpx * tpx);
    sc.truth.reserve(n_tiles);
    for (std::size_t t = 0; t < n_tiles; ++t) {
        TileRecord rec;
        rec.id = {t / g.n_cols, t % g.n_cols};
        const Rect tile = tile_extent(g, rec.id.row, rec.id.col);
        double covered = 0.0;
        for (const Rect& e : favela_exteriors)
            covered += overlap(e, tile);
        for (const Rect& h : favela_holes)
            covered -= overlap(h, tile);
        rec.favela_prop = std::clamp(covered / tile.area(), 0.0, 1.0);
        rec.industrial = std::any_of(industrial_rects.begin(), industrial_rects.end(),
                                     [&](const Rect& z) { return overlap(z, tile) > 0.0; });
        std::size_t veg_count = 0;
        double built_sum = 0.0;
        for (std::size_t r = rec.id.row * tpx; r < (rec.id.row + 1) * tpx; ++r)
            for (std::size_t c = rec.id.col * tpx; c < (rec.id.col + 1) * tpx; ++c) {
                veg_count += veg[r * width + c];
                built_sum += built[r * width + c];
            }
        rec.veg_prop = static_cast<double>(veg_count) / tile_pixels;
        rec.building_prop = built_sum / tile_pixels;
        classify(rec, rules);
        sc.truth.push_back(std::move(rec));
    }
    sc.buildings.add_band("built", std::move(built));
    return sc;
}

std::string truth_csv(const std::vector<TileRecord>& truth)
{
    std::string out = "row,col,favela_prop,veg_prop,building_prop,industrial,expected_label\n";
    for (const TileRecord& t : truth)
        out += std::to_string(t.id.row) + ',' + std::to_string(t.id.col) + ',' +
               detail::format_double(t.favela_prop) + ',' + detail::format_double(t.veg_prop) +
               ',' + detail::format_double(t.building_prop) + ',' + (t.industrial ? "1" : "0") +
               ',' + std::string(to_string(t.label)) + '\n';
    return out;
}

std::vector<TileRecord> read_truth_csv(const std::filesystem::path& path)
{
    std::istringstream in(detail::read_text_file(path));
    std::string line;
    std::getline(in, line);
    if (detail::strip_eol(line) !=
        "row,col,favela_prop,veg_prop,building_prop,industrial,expected_label")
        throw DataError(path.string() + ": unexpected truth CSV header");
    std::vector<TileRecord> out;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty())
            continue;
        const auto f = detail::split_csv(detail::strip_eol(line));
        if (f.size() != 7)
            throw DataError(path.string() + ": malformed truth row '" + line + "'");
        TileRecord t;
        try {
            t.id = {detail::parse_size(f[0]), detail::parse_size(f[1])};
            t.favela_prop = detail::parse_double(f[2]);
            t.veg_prop = detail::parse_double(f[3]);
            t.building_prop = detail::parse_double(f[4]);
        } catch (const Error& e) {
            throw DataError(path.string() + ": " + e.what());
        }
        t.industrial = f[5] == "1";
        t.label = f[6] == "favela"      ? Label::favela
                  : f[6] == "nonfavela" ? Label::nonfavela
                                        : Label::discarded;
        out.push_back(std::move(t));
    }
    return out;
}

double truth_imbalance(const std::vector<TileRecord>& truth)
{
    std::size_t fav = 0, non = 0;
    for (const TileRecord& t : truth) {
        fav += t.label == Label::favela;
        non += t.label == Label::nonfavela;
    }
    return fav == 0 ? 0.0 : static_cast<double>(non) / static_cast<double>(fav);
}

void emit(const Scenario& sc, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw IoError("cannot create fixture directory '" + dir.string() + "'" +
                      (ec ? ": " + ec.message() : std::string()));

    write_raster(sc.imagery, dir / "imagery.fgrid");
    write_raster(sc.buildings, dir / "buildings.fgrid");

    std::vector<GeoFeature> favelas;
    for (std::size_t i = 0; i < sc.favelas.size(); ++i)
        favelas.push_back({sc.favelas[i], {{"favela_id", static_cast<long long>(i)}}});
    write_geojson(favelas, dir / "favelas.geojson");

    std::vector<GeoFeature> industrial;
    for (std::size_t i = 0; i < sc.industrial.polygons.size(); ++i)
        industrial.push_back({MultiPolygon{{sc.industrial.polygons[i]}},
                              {{"zone_id", static_cast<long long>(i)}}});
    write_geojson(industrial, dir / "industrial.geojson");

    detail::write_text_file(dir / "truth.csv", truth_csv(sc.truth));

    std::size_t fav = 0, non = 0, disc = 0;
    for (const TileRecord& t : sc.truth) {
        fav += t.label == Label::favela;
        non += t.label == Label::nonfavela;
        disc += t.label == Label::discarded;
    }
    const ScenarioConfig& c = sc.config;
    nlohmann::ordered_json j;
    j["config"] = {{"extent", {c.extent.min_x, c.extent.min_y, c.extent.max_x, c.extent.max_y}},
                   {"pixel_size", c.pixel_size},
                   {"tile_size", c.tile_size},
                   {"n_favelas", c.n_favelas},
                   {"favela_texture_std", c.favela_texture_std},
                   {"formal_texture_std", c.formal_texture_std},
                   {"target_imbalance", c.target_imbalance},
                   {"seed", c.seed}};
    j["grid"] = {{"origin_x", sc.grid.origin_x},   {"origin_y", sc.grid.origin_y},
                 {"tile_size", sc.grid.tile_size}, {"n_cols", sc.grid.n_cols},
                 {"n_rows", sc.grid.n_rows}};
    j["expected"] = {{"favela", fav},
                     {"nonfavela", non},
                     {"discarded", disc},
                     {"imbalance_ratio", truth_imbalance(sc.truth)}};
    detail::write_text_file(dir / "scenario.json", j.dump(2) + "\n");
}

} // namespace favmap
