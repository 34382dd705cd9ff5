#include "favmap/error.hpp"
#include "favmap/features.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace favmap;

#ifndef FAVMAP_FIXTURE_DIR
#error "FAVMAP_FIXTURE_DIR must be defined"
#endif

namespace {

Raster two_band(std::size_t w, std::size_t h)
{
    Raster r;
    r.origin_x = 0;
    r.origin_y = static_cast<double>(h);
    r.pixel_size = 1;
    r.width = w;
    r.height = h;
    r.add_band("a", std::vector<float>(w * h, 0.f));
    r.add_band("b", std::vector<float>(w * h, 0.f));
    return r;
}

} // namespace

TEST_CASE("parse_embeddings reads header and rows")
{
    const char* text = "# source=m1 dim=4\n"
                       "row,col,f0,f1,f2,f3\n"
                       "0,0,1,2,3,4\n"
                       "0,1,5,6,7,8\n"
                       "# trailing comment\n"
                       "3,2,0.5,-1,1e-3,2\n";
    const auto fs = parse_embeddings(text);
    CHECK(fs.size() == 3);
    CHECK(fs.dimension() == 4);
    CHECK(fs.source() == "m1");
    REQUIRE(fs.find({3, 2}) != nullptr);
    CHECK((*fs.find({3, 2}))[2] == 1e-3);
}

TEST_CASE("parse_embeddings errors")
{
    SUBCASE("short row names the line")
    {
        try {
            parse_embeddings("# source=m dim=4\nrow,col,f0,f1,f2,f3\n0,0,1,2,3,4\n0,1,1,2,3\n");
            FAIL("expected an error");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("line 4") != std::string::npos);
        }
    }
    SUBCASE("duplicate id")
    {
        CHECK_THROWS_AS(parse_embeddings("# source=m dim=1\nrow,col,f0\n0,0,1\n0,0,2\n"),
                        DataError);
    }
    SUBCASE("non-finite value")
    {
        CHECK_THROWS_AS(parse_embeddings("# source=m dim=1\nrow,col,f0\n0,0,nan\n"), DataError);
        CHECK_THROWS_AS(parse_embeddings("# source=m dim=1\nrow,col,f0\n0,0,inf\n"), DataError);
    }
    SUBCASE("header must match the dimension")
    {
        CHECK_THROWS_AS(parse_embeddings("# source=m dim=2\nrow,col,f0\n0,0,1\n"), DataError);
        CHECK_THROWS_AS(parse_embeddings("row,col,f0\n0,0,1\n"), DataError);
    }
}

TEST_CASE("hand-written embedder fixture loads with the model id")
{
    const auto fs =
        load_embeddings(std::filesystem::path(FAVMAP_FIXTURE_DIR) / "embeddings_dinov2_8.csv");
    CHECK(fs.size() == 8);
    CHECK(fs.dimension() == 6);
    CHECK(fs.source() == "vit_base_patch14_dinov2.lvd142m");
    for (const auto& [id, v] : fs.vectors())
        for (double x : v)
            CHECK(std::isfinite(x));
}

TEST_CASE("embedding round trip is the identity")
{
    std::mt19937_64 g(4);
    std::normal_distribution<double> n(0, 1e3);
    FeatureSet fs(5, "roundtrip-model");
    for (std::size_t r = 0; r < 20; ++r)
        for (std::size_t c = 0; c < 3; ++c) {
            std::vector<double> v(5);
            for (double& x : v)
                x = n(g) * std::pow(10.0, double(int(g() % 20)) - 10);
            fs.add({r, c}, v);
        }
    CHECK(parse_embeddings(embeddings_csv(fs)) == fs);
    testsupport::TempDir dir("emb");
    write_embeddings(fs, dir / "e.csv");
    CHECK(load_embeddings(dir / "e.csv") == fs);
}

TEST_CASE("baseline of a constant band")
{
    Raster r = two_band(10, 10);
    std::fill(r.bands[0].values.begin(), r.bands[0].values.end(), 0.3f);
    const auto f = baseline_features(r, Rect{0, 0, 5, 5});
    REQUIRE(f.size() == 24);
    CHECK(f[0] == doctest::Approx(0.3f));
    CHECK(f[1] == 0.0);
    CHECK(f[2] == doctest::Approx(0.3f));
    CHECK(f[3] == doctest::Approx(0.3f));
    double mass = 0;
    for (std::size_t b = 0; b < kHistogramBins; ++b)
        mass += f[4 + b];
    CHECK(mass == doctest::Approx(1.0));
    CHECK(f[4] == 1.0);
}

TEST_CASE("baseline statistics match a direct computation")
{
    Raster r = two_band(6, 6);
    std::mt19937_64 g(8);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    for (auto& band : r.bands)
        for (float& v : band.values)
            v = u(g);
    const Rect tile{0, 3, 3, 6}; // top-left 3x3 block: rows 0..2, cols 0..2
    const auto f = baseline_features(r, tile);
    const auto& a = r.bands[0].values;
    float lo = a[0], hi = a[0];
    for (float v : a) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<double> px;
    for (std::size_t row = 0; row < 3; ++row)
        for (std::size_t col = 0; col < 3; ++col)
            px.push_back(a[row * 6 + col]);
    double mean = 0;
    for (double v : px)
        mean += v / 9.0;
    double var = 0;
    for (double v : px)
        var += (v - mean) * (v - mean) / 9.0;
    CHECK(f[0] == doctest::Approx(mean).epsilon(1e-9));
    CHECK(f[1] == doctest::Approx(std::sqrt(var)).epsilon(1e-9));
    CHECK(f[2] == *std::min_element(px.begin(), px.end()));
    CHECK(f[3] == *std::max_element(px.begin(), px.end()));
    std::vector<double> hist(8, 0.0);
    for (double v : px) {
        auto bin = static_cast<std::size_t>((v - lo) / (hi - lo) * 8);
        hist[std::min<std::size_t>(bin, 7)] += 1.0 / 9.0;
    }
    for (std::size_t b = 0; b < 8; ++b)
        CHECK(f[4 + b] == doctest::Approx(hist[b]));
}

TEST_CASE("baseline is translation-equivariant over tiles")
{
    Raster r = two_band(8, 4);
    std::mt19937_64 g(3);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    for (auto& band : r.bands)
        for (std::size_t row = 0; row < 4; ++row)
            for (std::size_t col = 0; col < 4; ++col) {
                const float v = u(g);
                band.values[row * 8 + col] = v;
                band.values[row * 8 + col + 4] = v;
            }
    CHECK(baseline_features(r, Rect{0, 0, 4, 4}) == baseline_features(r, Rect{4, 0, 8, 4}));
}

TEST_CASE("baseline errors without pixels")
{
    Raster r = two_band(4, 4);
    CHECK_THROWS_AS(baseline_features(r, Rect{100, 100, 104, 104}), DataError);
}

TEST_CASE("extract_baseline is thread invariant")
{
    Raster r = two_band(30, 30);
    std::mt19937_64 g(6);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    for (auto& band : r.bands)
        for (float& v : band.values)
            v = u(g);
    const TileGrid grid{0, 30, 10, 3, 3};
    std::vector<TileId> ids;
    for (std::size_t i = 0; i < 9; ++i)
        ids.push_back({i / 3, i % 3});
    const auto a = extract_baseline(r, grid, ids, 1);
    const auto b = extract_baseline(r, grid, ids, 3);
    CHECK(a == b);
    CHECK(a.dimension() == 24);
    CHECK(a.source() == "baseline");
}

TEST_CASE("assemble joins, orders and reports")
{
    FeatureSet fs(2, "m");
    std::vector<TileRecord> tiles;
    for (std::size_t i = 0; i < 10; ++i) {
        TileRecord t;
        t.id = {9 - i, i};
        t.label = (i % 3 == 0) ? Label::favela : Label::nonfavela;
        tiles.push_back(t);
        fs.add(t.id, {double(i), double(i) * 10});
    }
    fs.add({50, 50}, {0, 0});
    const auto dm = assemble(tiles, fs);
    CHECK(dm.x.rows() == 10);
    CHECK(dm.x.cols() == 2);
    CHECK(dm.ignored_features == 1);
    for (std::size_t i = 1; i < dm.ids.size(); ++i)
        CHECK(dm.ids[i - 1] < dm.ids[i]);
    for (std::size_t i = 0; i < dm.ids.size(); ++i) {
        const auto* v = fs.find(dm.ids[i]);
        CHECK(std::vector<double>(dm.x.row(i).begin(), dm.x.row(i).end()) == *v);
        const std::size_t orig = dm.ids[i].col;
        CHECK(dm.y[i] == (orig % 3 == 0 ? 1 : 0));
    }

    TileRecord extra;
    extra.id = {77, 1};
    extra.label = Label::favela;
    tiles.push_back(extra);
    try {
        assemble(tiles, fs);
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("(77,1)") != std::string::npos);
    }
}
