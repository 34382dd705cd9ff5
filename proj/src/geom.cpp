#include "favmap/geom.hpp"

#include "favmap/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace favmap {

void validate(const Rect& r)
{
    if (!(r.valid() && std::isfinite(r.min_x) && std::isfinite(r.max_x) &&
          std::isfinite(r.min_y) && std::isfinite(r.max_y)))
        throw InvalidArgument("invalid rectangle [" + std::to_string(r.min_x) + ", " +
                              std::to_string(r.max_x) + "] x [" + std::to_string(r.min_y) +
                              ", " + std::to_string(r.max_y) + "]");
}

PolygonRing make_ring(std::vector<Point> vertices)
{
    std::vector<Point> out;
    out.reserve(vertices.size());
    for (const Point& p : vertices) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw DataError("ring vertex is not finite");
        if (out.empty() || !(out.back() == p))
            out.push_back(p);
    }
    while (out.size() > 1 && out.front() == out.back())
        out.pop_back();
    if (out.size() < 3)
        throw DataError("ring has fewer than 3 distinct vertices");
    return PolygonRing{std::move(out)};
}

double ring_area(std::span<const Point> v) noexcept
{
    const std::size_t n = v.size();
    if (n < 3)
        return 0.0;
    // Coordinates relative to the first vertex keep the products small for
    // projected coordinates in the millions of meters.
    const Point o = v[0];
    double twice = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double ax = v[i].x - o.x, ay = v[i].y - o.y;
        const double bx = v[i + 1].x - o.x, by = v[i + 1].y - o.y;
        twice += ax * by - bx * ay;
    }
    return 0.5 * twice;
}

double ring_area(const PolygonRing& ring) noexcept
{
    return ring_area(std::span<const Point>(ring.vertices));
}

Rect bounding_box(std::span<const Point> vertices) noexcept
{
    Rect r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const Point& p : vertices) {
        r.min_x = std::min(r.min_x, p.x);
        r.min_y = std::min(r.min_y, p.y);
        r.max_x = std::max(r.max_x, p.x);
        r.max_y = std::max(r.max_y, p.y);
    }
    return r;
}

Rect bounding_box(const MultiPolygon& mp) noexcept
{
    Rect r = bounding_box(std::span<const Point>{});
    for (const Polygon& poly : mp.polygons) {
        const Rect b = bounding_box(poly.exterior.vertices);
        r.min_x = std::min(r.min_x, b.min_x);
        r.min_y = std::min(r.min_y, b.min_y);
        r.max_x = std::max(r.max_x, b.max_x);
        r.max_y = std::max(r.max_y, b.max_y);
    }
    return r;
}

void normalize_orientation(MultiPolygon& mp)
{
    for (Polygon& poly : mp.polygons) {
        if (ring_area(poly.exterior) < 0.0)
            std::reverse(poly.exterior.vertices.begin(), poly.exterior.vertices.end());
        for (PolygonRing& hole : poly.holes)
            if (ring_area(hole) > 0.0)
                std::reverse(hole.vertices.begin(), hole.vertices.end());
    }
}

namespace {

enum class Edge { left, right, bottom, top };

bool inside(const Point& p, Edge e, const Rect& r) noexcept
{
    switch (e) {
    case Edge::left: return p.x >= r.min_x;
    case Edge::right: return p.x <= r.max_x;
    case Edge::bottom: return p.y >= r.min_y;
    case Edge::top: return p.y <= r.max_y;
    }
    return false;
}

// Intersection of segment a-b with the boundary line of edge e. Only called
// when a and b lie on opposite sides, so the denominator is nonzero. The
// coordinate on the clip line is set exactly.
Point crossing(const Point& a, const Point& b, Edge e, const Rect& r) noexcept
{
    switch (e) {
    case Edge::left:
    case Edge::right: {
        const double x = e == Edge::left ? r.min_x : r.max_x;
        const double t = (x - a.x) / (b.x - a.x);
        return {x, a.y + t * (b.y - a.y)};
    }
    case Edge::bottom:
    case Edge::top: {
        const double y = e == Edge::bottom ? r.min_y : r.max_y;
        const double t = (y - a.y) / (b.y - a.y);
        return {a.x + t * (b.x - a.x), y};
    }
    }
    return a;
}

void clip_against(const std::vector<Point>& in, std::vector<Point>& out, Edge e, const Rect& r)
{
    out.clear();
    const std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& cur = in[i];
        const Point& prev = in[(i + n - 1) % n];
        const bool cur_in = inside(cur, e, r);
        const bool prev_in = inside(prev, e, r);
        if (cur_in) {
            if (!prev_in)
                out.push_back(crossing(prev, cur, e, r));
            out.push_back(cur);
        } else if (prev_in) {
            out.push_back(crossing(prev, cur, e, r));
        }
    }
}

} // namespace

std::vector<Point> clip_ring_to_rect(std::span<const Point> ring, const Rect& rect)
{
    std::vector<Point> a(ring.begin(), ring.end());
    std::vector<Point> b;
    b.reserve(a.size() + 4);
    for (Edge e : {Edge::left, Edge::right, Edge::bottom, Edge::top}) {
        clip_against(a, b, e, rect);
        std::swap(a, b);
        if (a.empty())
            return {};
    }

    // Clamp away interpolation overshoot, then drop repeated vertices.
    std::vector<Point> out;
    out.reserve(a.size());
    for (Point p : a) {
        p.x = std::clamp(p.x, rect.min_x, rect.max_x);
        p.y = std::clamp(p.y, rect.min_y, rect.max_y);
        if (out.empty() || !(out.back() == p))
            out.push_back(p);
    }
    while (out.size() > 1 && out.front() == out.back())
        out.pop_back();
    if (out.size() < 3)
        return {};
    return out;
}

MultiPolygon clip_polygon_to_rect(const MultiPolygon& mp, const Rect& rect)
{
    MultiPolygon result;
    for (const Polygon& poly : mp.polygons) {
        const Rect bb = bounding_box(poly.exterior.vertices);
        if (bb.max_x < rect.min_x || bb.min_x > rect.max_x || bb.max_y < rect.min_y ||
            bb.min_y > rect.max_y)
            continue;
        std::vector<Point> ext = clip_ring_to_rect(poly.exterior.vertices, rect);
        if (ext.empty())
            continue;
        Polygon clipped;
        clipped.exterior.vertices = std::move(ext);
        for (const PolygonRing& hole : poly.holes) {
            std::vector<Point> h = clip_ring_to_rect(hole.vertices, rect);
            if (!h.empty())
                clipped.holes.push_back(PolygonRing{std::move(h)});
        }
        result.polygons.push_back(std::move(clipped));
    }
    return result;
}

double area(const MultiPolygon& mp) noexcept
{
    double total = 0.0;
    for (const Polygon& poly : mp.polygons) {
        double a = std::abs(ring_area(poly.exterior));
        for (const PolygonRing& hole : poly.holes)
            a -= std::abs(ring_area(hole));
        total += a;
    }
    return total;
}

double coverage_proportion(const MultiPolygon& mp, const Rect& rect)
{
    validate(rect);
    const double covered = area(clip_polygon_to_rect(mp, rect));
    return std::clamp(covered / rect.area(), 0.0, 1.0);
}

} // namespace favmap
