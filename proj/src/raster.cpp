#include "favmap/raster.hpp"

#include "favmap/error.hpp"
#include "text.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace favmap {

bool Raster::is_nodata(float v) const noexcept
{
    return std::isnan(v) || (nodata && v == *nodata);
}

const Band* Raster::find_band(std::string_view name) const noexcept
{
    for (const Band& b : bands)
        if (b.name == name)
            return &b;
    return nullptr;
}

const Band& Raster::band(std::string_view name) const
{
    if (const Band* b = find_band(name))
        return *b;
    throw InvalidArgument("unknown band '" + std::string(name) + "'");
}

void Raster::add_band(std::string name, std::vector<float> values)
{
    if (find_band(name))
        throw InvalidArgument("duplicate band '" + name + "'");
    if (values.size() != width * height)
        throw InvalidArgument("band '" + name + "' has " + std::to_string(values.size()) +
                              " values, expected " + std::to_string(width * height));
    bands.push_back(Band{std::move(name), std::move(values)});
}

void validate(const Raster& raster)
{
    if (!(raster.pixel_size > 0.0) || !std::isfinite(raster.pixel_size))
        throw DataError("raster pixel_size must be positive");
    if (raster.width == 0 || raster.height == 0)
        throw DataError("raster has zero width or height");
    std::set<std::string> names;
    for (const Band& b : raster.bands) {
        if (!names.insert(b.name).second)
            throw DataError("duplicate band '" + b.name + "'");
        if (b.values.size() != raster.width * raster.height)
            throw DataError("band '" + b.name + "' size does not match raster shape");
    }
}

std::vector<float> ndvi(std::span<const float> red, std::span<const float> nir,
                        std::optional<float> nodata)
{
    if (red.size() != nir.size())
        throw InvalidArgument("ndvi: red and nir bands differ in size (" +
                              std::to_string(red.size()) + " vs " + std::to_string(nir.size()) +
                              ")");
    std::vector<float> out(red.size());
    const float fill = nodata ? *nodata : std::numeric_limits<float>::quiet_NaN();
    for (std::size_t i = 0; i < red.size(); ++i) {
        const float r = red[i], n = nir[i];
        if (std::isnan(r) || std::isnan(n) || (nodata && (r == *nodata || n == *nodata))) {
            out[i] = fill;
            continue;
        }
        const double sum = static_cast<double>(n) + static_cast<double>(r);
        out[i] = sum == 0.0 ? 0.0f
                            : static_cast<float>((static_cast<double>(n) - r) / sum);
    }
    return out;
}

void add_ndvi_band(Raster& raster, std::string_view red, std::string_view nir)
{
    auto values = ndvi(raster.band(red).values, raster.band(nir).values, raster.nodata);
    raster.add_band("ndvi", std::move(values));
}

Threshold Threshold::negated() const noexcept
{
    switch (op) {
    case Op::ge: return {Op::lt, value};
    case Op::gt: return {Op::le, value};
    case Op::le: return {Op::gt, value};
    case Op::lt: return {Op::ge, value};
    }
    return *this;
}

PixelWindow pixel_window(const Raster& raster, const Rect& rect)
{
    const double ps = raster.pixel_size;
    auto cx = [&](long c) { return raster.origin_x + (static_cast<double>(c) + 0.5) * ps; };
    auto cy = [&](long r) { return raster.origin_y - (static_cast<double>(r) + 0.5) * ps; };
    const long w = static_cast<long>(raster.width);
    const long h = static_cast<long>(raster.height);

    // First column whose center is >= x, refined against the exact center
    // formula so the result agrees with Rect::contains_half_open.
    auto first_col_at_or_after = [&](double x) {
        double est = std::ceil((x - raster.origin_x) / ps - 0.5);
        long c = static_cast<long>(std::clamp(est, -1.0, static_cast<double>(w) + 1.0));
        while (c > 0 && cx(c - 1) >= x)
            --c;
        while (c < w && cx(c) < x)
            ++c;
        return std::clamp(c, 0L, w);
    };
    // First row whose center is < y (rows run downwards).
    auto first_row_below = [&](double y) {
        double est = std::floor((raster.origin_y - y) / ps - 0.5);
        long r = static_cast<long>(std::clamp(est, -1.0, static_cast<double>(h) + 1.0));
        while (r > 0 && cy(r - 1) < y)
            --r;
        while (r < h && cy(r) >= y)
            ++r;
        return std::clamp(r, 0L, h);
    };

    PixelWindow win;
    win.col_begin = static_cast<std::size_t>(first_col_at_or_after(rect.min_x));
    win.col_end = static_cast<std::size_t>(first_col_at_or_after(rect.max_x));
    win.row_begin = static_cast<std::size_t>(first_row_below(rect.max_y));
    win.row_end = static_cast<std::size_t>(first_row_below(rect.min_y));
    return win;
}

namespace {

std::size_t expected_pixels(const Raster& raster, const Rect& rect)
{
    const double n = std::round(rect.width() / raster.pixel_size) *
                     std::round(rect.height() / raster.pixel_size);
    return n > 0 ? static_cast<std::size_t>(n) : 0;
}

} // namespace

PixelFraction pixel_fraction(const Raster& raster, std::string_view band_name, const Rect& rect,
                             Threshold pred)
{
    const Band& band = raster.band(band_name);
    const PixelWindow win = pixel_window(raster, rect);
    PixelFraction out;
    for (std::size_t r = win.row_begin; r < win.row_end; ++r) {
        const float* row = band.values.data() + r * raster.width;
        for (std::size_t c = win.col_begin; c < win.col_end; ++c) {
            if (raster.is_nodata(row[c]))
                continue;
            ++out.valid;
            if (pred(row[c]))
                ++out.matched;
        }
    }
    const std::size_t expected = expected_pixels(raster, rect);
    out.missing = expected > win.size() ? expected - win.size() : 0;
    if (out.valid == 0) {
        out.empty = true;
        return out;
    }
    out.fraction = static_cast<double>(out.matched) / static_cast<double>(out.valid);
    return out;
}

PixelMean pixel_mean(const Raster& raster, std::string_view band_name, const Rect& rect)
{
    const Band& band = raster.band(band_name);
    const PixelWindow win = pixel_window(raster, rect);
    PixelMean out;
    double sum = 0.0;
    for (std::size_t r = win.row_begin; r < win.row_end; ++r) {
        const float* row = band.values.data() + r * raster.width;
        for (std::size_t c = win.col_begin; c < win.col_end; ++c) {
            if (raster.is_nodata(row[c]))
                continue;
            ++out.valid;
            sum += row[c];
        }
    }
    const std::size_t expected = expected_pixels(raster, rect);
    out.missing = expected > win.size() ? expected - win.size() : 0;
    if (out.valid == 0) {
        out.empty = true;
        return out;
    }
    out.mean = sum / static_cast<double>(out.valid);
    return out;
}

namespace {

constexpr std::string_view kMagic = "FAVMAP-GRID 1";

std::uint32_t to_little(std::uint32_t v)
{
    if constexpr (std::endian::native == std::endian::big)
        return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
    return v;
}

} // namespace

Raster read_raster(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open raster '" + path.string() + "'");

    auto fail = [&](const std::string& what) {
        return DataError("raster '" + path.string() + "': " + what);
    };

    std::string line;
    if (!std::getline(in, line) || line != kMagic)
        throw fail("missing '" + std::string(kMagic) + "' header");

    Raster raster;
    std::vector<std::string> band_names;
    bool have_origin_x = false, have_origin_y = false, have_ps = false, have_w = false,
         have_h = false, have_bands = false;
    for (;;) {
        if (!std::getline(in, line))
            throw fail("header not terminated by 'end'");
        if (line == "end")
            break;
        std::istringstream fields(line);
        std::string key;
        fields >> key;
        try {
            if (key == "origin_x") {
                raster.origin_x = detail::parse_double(detail::next_token(fields));
                have_origin_x = true;
            } else if (key == "origin_y") {
                raster.origin_y = detail::parse_double(detail::next_token(fields));
                have_origin_y = true;
            } else if (key == "pixel_size") {
                raster.pixel_size = detail::parse_double(detail::next_token(fields));
                have_ps = true;
            } else if (key == "width") {
                raster.width = detail::parse_size(detail::next_token(fields));
                have_w = true;
            } else if (key == "height") {
                raster.height = detail::parse_size(detail::next_token(fields));
                have_h = true;
            } else if (key == "nodata") {
                const std::string v = detail::next_token(fields);
                if (v != "none")
                    raster.nodata = static_cast<float>(detail::parse_double(v));
            } else if (key == "bands") {
                std::string name;
                while (fields >> name)
                    band_names.push_back(name);
                have_bands = true;
            } else {
                throw fail("unknown header key '" + key + "'");
            }
        } catch (const DataError&) {
            throw;
        } catch (const Error& e) {
            throw fail(e.what());
        }
    }
    if (!(have_origin_x && have_origin_y && have_ps && have_w && have_h && have_bands))
        throw fail("incomplete header");
    if (band_names.empty())
        throw fail("no bands declared");

    const std::size_t count = raster.width * raster.height;
    std::vector<std::uint32_t> raw(count);
    for (const std::string& name : band_names) {
        in.read(reinterpret_cast<char*>(raw.data()),
                static_cast<std::streamsize>(count * sizeof(std::uint32_t)));
        if (static_cast<std::size_t>(in.gcount()) != count * sizeof(std::uint32_t))
            throw fail("truncated data for band '" + name + "'");
        std::vector<float> values(count);
        for (std::size_t i = 0; i < count; ++i)
            values[i] = std::bit_cast<float>(to_little(raw[i]));
        raster.bands.push_back(Band{name, std::move(values)});
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw fail("trailing bytes after band data");

    try {
        validate(raster);
    } catch (const DataError& e) {
        throw fail(e.what());
    }
    return raster;
}

void write_raster(const Raster& raster, const std::filesystem::path& path)
{
    validate(raster);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write raster '" + path.string() + "'");

    out << kMagic << '\n';
    out << "origin_x " << detail::format_double(raster.origin_x) << '\n';
    out << "origin_y " << detail::format_double(raster.origin_y) << '\n';
    out << "pixel_size " << detail::format_double(raster.pixel_size) << '\n';
    out << "width " << raster.width << '\n';
    out << "height " << raster.height << '\n';
    out << "nodata "
        << (raster.nodata ? detail::format_double(static_cast<double>(*raster.nodata)) : "none")
        << '\n';
    out << "bands";
    for (const Band& b : raster.bands)
        out << ' ' << b.name;
    out << "\nend\n";

    std::vector<std::uint32_t> raw;
    for (const Band& b : raster.bands) {
        raw.resize(b.values.size());
        for (std::size_t i = 0; i < raw.size(); ++i)
            raw[i] = to_little(std::bit_cast<std::uint32_t>(b.values[i]));
        out.write(reinterpret_cast<const char*>(raw.data()),
                  static_cast<std::streamsize>(raw.size() * sizeof(std::uint32_t)));
    }
    if (!out)
        throw IoError("failed writing raster '" + path.string() + "'");
}

} // namespace favmap
