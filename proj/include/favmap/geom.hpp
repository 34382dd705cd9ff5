#pragma once

#include <span>
#include <vector>

namespace favmap {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned rectangle in map coordinates (meters, y up).
struct Rect {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    double width() const noexcept { return max_x - min_x; }
    double height() const noexcept { return max_y - min_y; }
    double area() const noexcept { return width() * height(); }

    /// max > min on both axes.
    bool valid() const noexcept { return max_x > min_x && max_y > min_y; }

    /// Half-open membership used for pixel centers: points on the min edges
    /// belong to the rectangle, points on the max edges do not.
    bool contains_half_open(const Point& p) const noexcept
    {
        return p.x >= min_x && p.x < max_x && p.y >= min_y && p.y < max_y;
    }

    bool intersects(const Rect& o) const noexcept
    {
        return min_x < o.max_x && o.min_x < max_x && min_y < o.max_y && o.min_y < max_y;
    }

    friend bool operator==(const Rect&, const Rect&) = default;
};

/// Throws InvalidArgument unless r.valid().
void validate(const Rect& r);

/// Closed ring; the last vertex connects back to the first.
struct PolygonRing {
    std::vector<Point> vertices;
};

struct Polygon {
    PolygonRing exterior;
    std::vector<PolygonRing> holes;
};

struct MultiPolygon {
    std::vector<Polygon> polygons;

    bool empty() const noexcept { return polygons.empty(); }
};

/// Builds a ring from raw coordinates: drops consecutive duplicates and an
/// explicit closing vertex. Throws DataError if fewer than 3 vertices remain.
PolygonRing make_ring(std::vector<Point> vertices);

/// Signed shoelace area; positive for counter-clockwise rings.
double ring_area(const PolygonRing& ring) noexcept;
double ring_area(std::span<const Point> vertices) noexcept;

Rect bounding_box(std::span<const Point> vertices) noexcept;
Rect bounding_box(const MultiPolygon& mp) noexcept;

/// Makes exteriors counter-clockwise and holes clockwise.
void normalize_orientation(MultiPolygon& mp);

/// Sutherland-Hodgman clip of one ring against the four half-planes of rect.
/// Returns an empty vector when fewer than 3 distinct vertices survive.
std::vector<Point> clip_ring_to_rect(std::span<const Point> ring, const Rect& rect);

/// Intersection of mp with rect. Holes are clipped the same way and kept as
/// holes; polygons whose exterior vanishes are dropped.
MultiPolygon clip_polygon_to_rect(const MultiPolygon& mp, const Rect& rect);

/// Sum over polygons of |exterior| minus |holes|.
double area(const MultiPolygon& mp) noexcept;

/// area(clip(mp, rect)) / area(rect), clamped to [0, 1].
double coverage_proportion(const MultiPolygon& mp, const Rect& rect);

} // namespace favmap
