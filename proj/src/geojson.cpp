#include "favmap/geojson.hpp"

#include "favmap/error.hpp"
#include "io.hpp"

#include <json.hpp>

namespace favmap {

using nlohmann::json;

namespace {

PolygonRing ring_from_json(const json& coords)
{
    if (!coords.is_array())
        throw DataError("GeoJSON ring is not an array");
    std::vector<Point> pts;
    pts.reserve(coords.size());
    for (const json& c : coords) {
        if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number())
            throw DataError("GeoJSON position must be [x, y]");
        pts.push_back({c[0].get<double>(), c[1].get<double>()});
    }
    return make_ring(std::move(pts));
}

Polygon polygon_from_json(const json& rings)
{
    if (!rings.is_array() || rings.empty())
        throw DataError("GeoJSON polygon has no rings");
    Polygon poly;
    poly.exterior = ring_from_json(rings[0]);
    for (std::size_t i = 1; i < rings.size(); ++i)
        poly.holes.push_back(ring_from_json(rings[i]));
    return poly;
}

void collect(const json& node, MultiPolygon& out)
{
    if (node.is_null())
        return;
    if (!node.is_object() || !node.contains("type"))
        throw DataError("GeoJSON object without 'type'");
    const std::string type = node.at("type").get<std::string>();
    if (type == "FeatureCollection") {
        for (const json& f : node.at("features"))
            collect(f, out);
    } else if (type == "Feature") {
        collect(node.contains("geometry") ? node.at("geometry") : json(nullptr), out);
    } else if (type == "GeometryCollection") {
        for (const json& g : node.at("geometries"))
            collect(g, out);
    } else if (type == "Polygon") {
        out.polygons.push_back(polygon_from_json(node.at("coordinates")));
    } else if (type == "MultiPolygon") {
        for (const json& rings : node.at("coordinates"))
            out.polygons.push_back(polygon_from_json(rings));
    } else {
        throw DataError("unsupported GeoJSON geometry type '" + type + "'");
    }
}

json ring_to_json(const PolygonRing& ring)
{
    json arr = json::array();
    for (const Point& p : ring.vertices)
        arr.push_back({p.x, p.y});
    if (!ring.vertices.empty())
        arr.push_back({ring.vertices.front().x, ring.vertices.front().y});
    return arr;
}

} // namespace

MultiPolygon parse_geojson_polygons(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid GeoJSON: ") + e.what());
    }
    MultiPolygon mp;
    try {
        collect(doc, mp);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed GeoJSON: ") + e.what());
    }
    normalize_orientation(mp);
    return mp;
}

MultiPolygon read_geojson_polygons(const std::filesystem::path& path)
{
    const std::string text = detail::read_text_file(path);
    try {
        return parse_geojson_polygons(text);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string to_geojson(std::span<const GeoFeature> features)
{
    json fc = {{"type", "FeatureCollection"}, {"features", json::array()}};
    for (const GeoFeature& f : features) {
        json coords = json::array();
        for (const Polygon& poly : f.geometry.polygons) {
            json rings = json::array();
            rings.push_back(ring_to_json(poly.exterior));
            for (const PolygonRing& h : poly.holes)
                rings.push_back(ring_to_json(h));
            coords.push_back(std::move(rings));
        }
        json props = json::object();
        for (const auto& [key, value] : f.properties)
            std::visit([&](const auto& v) { props[key] = v; }, value);
        fc["features"].push_back({{"type", "Feature"},
                                  {"properties", std::move(props)},
                                  {"geometry", {{"type", "MultiPolygon"}, {"coordinates", coords}}}});
    }
    return fc.dump() + "\n";
}

void write_geojson(std::span<const GeoFeature> features, const std::filesystem::path& path)
{
    detail::write_text_file(path, to_geojson(features));
}

} // namespace favmap
