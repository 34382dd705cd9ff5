#include "favmap/error.hpp"
#include "favmap/geojson.hpp"
#include "favmap/geom.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace favmap;
using testsupport::single;

namespace {

MultiPolygon square(double x0, double y0, double x1, double y1)
{
    return single({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

} // namespace

TEST_CASE("ring_area is signed by orientation")
{
    const std::vector<Point> ccw{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    CHECK(ring_area(ccw) == doctest::Approx(1.0));
    const std::vector<Point> cw(ccw.rbegin(), ccw.rend());
    CHECK(ring_area(cw) == doctest::Approx(-1.0));
    const std::vector<Point> tri{{0, 0}, {4, 0}, {0, 3}};
    CHECK(ring_area(tri) == doctest::Approx(6.0));
}

TEST_CASE("ring_area keeps precision at projected coordinates")
{
    const double x = 685123.0, y = 7452345.0;
    const std::vector<Point> sq{{x, y}, {x + 5, y}, {x + 5, y + 5}, {x, y + 5}};
    CHECK(ring_area(sq) == 25.0);
}

TEST_CASE("make_ring drops closing and duplicate vertices")
{
    auto r = make_ring({{0, 0}, {1, 0}, {1, 0}, {1, 1}, {0, 0}});
    CHECK(r.vertices.size() == 3);
    CHECK_THROWS_AS(make_ring({{0, 0}, {1, 0}, {0, 0}}), DataError);
}

TEST_CASE("validate rejects degenerate rects")
{
    CHECK_THROWS_AS(validate(Rect{0, 0, 0, 1}), InvalidArgument);
    CHECK_NOTHROW(validate(Rect{0, 0, 1, 1}));
}

TEST_CASE("clip_polygon_to_rect examples")
{
    const Rect r{0, 0, 10, 10};
    SUBCASE("identity")
    {
        auto c = clip_polygon_to_rect(square(0, 0, 10, 10), r);
        CHECK(area(c) == doctest::Approx(100.0));
    }
    SUBCASE("disjoint")
    {
        auto c = clip_polygon_to_rect(square(20, 20, 30, 30), r);
        CHECK(area(c) == 0.0);
    }
    SUBCASE("triangles against the subpixel oracle")
    {
        // [0,5]^2 lies under the hypotenuse x + y = 10, so the first clip is the full square.
        const auto tri = single({{0, 0}, {10, 0}, {0, 10}});
        const auto steep = single({{0, 0}, {10, 0}, {0, 6}});
        const Rect q{0, 0, 5, 5};
        for (const auto* mp : {&tri, &steep}) {
            const double got = area(clip_polygon_to_rect(*mp, q));
            const double oracle =
                testsupport::subpixel_coverage(testsupport::rings_of(*mp), q) * q.area();
            CHECK(std::abs(got - oracle) / oracle < 1e-3);
        }
        CHECK(area(clip_polygon_to_rect(tri, q)) == doctest::Approx(25.0));
        // y <= 6 - 0.6x capped at 5: 5 * 5/3 + integral of (6 - 0.6x) over [5/3, 5]
        CHECK(area(clip_polygon_to_rect(steep, q)) == doctest::Approx(65.0 / 3.0));
    }
}

TEST_CASE("coverage_proportion examples")
{
    const Rect r{0, 0, 10, 10};
    CHECK(coverage_proportion(square(-5, -5, 15, 15), r) == 1.0);
    CHECK(coverage_proportion(square(20, 0, 30, 10), r) == 0.0);
    CHECK(coverage_proportion(square(0, 0, 5, 10), r) == doctest::Approx(0.5));
}

TEST_CASE("holes subtract from coverage")
{
    auto mp = single({{0, 0}, {10, 0}, {10, 10}, {0, 10}}, {{{2, 2}, {2, 4}, {4, 4}, {4, 2}}});
    normalize_orientation(mp);
    CHECK(coverage_proportion(mp, Rect{0, 0, 10, 10}) == doctest::Approx(0.96));
}

TEST_CASE("normalize_orientation makes exteriors ccw and holes cw")
{
    auto mp = single({{0, 0}, {0, 10}, {10, 10}, {10, 0}}, {{{2, 2}, {4, 2}, {4, 4}, {2, 4}}});
    normalize_orientation(mp);
    CHECK(ring_area(mp.polygons[0].exterior) > 0);
    CHECK(ring_area(mp.polygons[0].holes[0]) < 0);
}

TEST_CASE("clip output stays inside the rect and never exceeds either area")
{
    std::mt19937_64 g(11);
    const Rect r{100, 200, 250, 350};
    for (int i = 0; i < 300; ++i) {
        auto mp = testsupport::random_concave(g, r, i % 3 == 0);
        normalize_orientation(mp);
        const auto c = clip_polygon_to_rect(mp, r);
        for (const auto& p : c.polygons) {
            for (const auto& v : p.exterior.vertices) {
                CHECK(v.x >= r.min_x - 1e-9);
                CHECK(v.x <= r.max_x + 1e-9);
                CHECK(v.y >= r.min_y - 1e-9);
                CHECK(v.y <= r.max_y + 1e-9);
            }
        }
        CHECK(area(c) <= std::min(area(mp), r.area()) + 1e-6);
    }
}

TEST_CASE("coverage is monotone under adding disjoint polygons")
{
    std::mt19937_64 g(5);
    const Rect r{0, 0, 100, 100};
    for (int i = 0; i < 100; ++i) {
        auto a = testsupport::random_convex(g, r);
        auto mp = single(a);
        normalize_orientation(mp);
        const Rect bb = bounding_box(mp);
        // A second square to the right of the first polygon's bounding box.
        auto extra = square(bb.max_x + 1, 10, bb.max_x + 30, 60);
        MultiPolygon both = mp;
        both.polygons.push_back(extra.polygons[0]);
        CHECK(coverage_proportion(both, r) >= coverage_proportion(mp, r));
    }
}

TEST_CASE("coverage matches the subpixel oracle on random polygons")
{
    std::mt19937_64 g(2024);
    const Rect r{681000, 7451000, 681150, 7451150};
    for (int i = 0; i < 60; ++i) {
        MultiPolygon mp = (i % 2 == 0) ? single(testsupport::random_convex(g, r))
                                       : testsupport::random_concave(g, r, i % 4 == 1);
        normalize_orientation(mp);
        const double got = coverage_proportion(mp, r);
        const double oracle = testsupport::subpixel_coverage(testsupport::rings_of(mp), r, 1024);
        CHECK(got >= 0.0);
        CHECK(got <= 1.0);
        CHECK(std::abs(got - oracle) < 2e-3);
    }
}

TEST_CASE("GeoJSON ingestion")
{
    SUBCASE("feature collection with polygon and multipolygon")
    {
        const char* text = R"({"type":"FeatureCollection","features":[
          {"type":"Feature","properties":{},"geometry":{"type":"Polygon",
            "coordinates":[[[0,0],[0,10],[10,10],[10,0],[0,0]]]}},
          {"type":"Feature","properties":{},"geometry":null},
          {"type":"Feature","properties":{},"geometry":{"type":"MultiPolygon",
            "coordinates":[[[[20,0],[30,0],[30,10],[20,10],[20,0]]]]}}]})";
        auto mp = parse_geojson_polygons(text);
        REQUIRE(mp.polygons.size() == 2);
        CHECK(ring_area(mp.polygons[0].exterior) == doctest::Approx(100.0));
        CHECK(area(mp) == doctest::Approx(200.0));
    }
    SUBCASE("non-polygon geometry is rejected")
    {
        CHECK_THROWS_AS(parse_geojson_polygons(R"({"type":"Point","coordinates":[0,0]})"),
                        DataError);
    }
    SUBCASE("malformed json")
    {
        CHECK_THROWS_AS(parse_geojson_polygons("{nope"), DataError);
    }
    SUBCASE("round trip through to_geojson")
    {
        GeoFeature f{square(0, 0, 4, 4), {{"name", std::string("a")}, {"n", 3LL}}};
        auto text = to_geojson(std::span<const GeoFeature>(&f, 1));
        auto back = parse_geojson_polygons(text);
        CHECK(area(back) == doctest::Approx(16.0));
    }
}
