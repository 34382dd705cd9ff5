#pragma once

#include "favmap/geom.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace favmap {

struct Band {
    std::string name;
    std::vector<float> values; // row-major, width * height
};

/// North-up raster. Row 0 is the top row; pixel (r, c) has its center at
///   (origin_x + (c + 0.5) * pixel_size, origin_y - (r + 0.5) * pixel_size).
struct Raster {
    double origin_x = 0.0; // left edge
    double origin_y = 0.0; // top edge
    double pixel_size = 1.0;
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<Band> bands;
    std::optional<float> nodata;

    Rect extent() const noexcept
    {
        return {origin_x, origin_y - static_cast<double>(height) * pixel_size,
                origin_x + static_cast<double>(width) * pixel_size, origin_y};
    }

    Point pixel_center(std::size_t row, std::size_t col) const noexcept
    {
        return {origin_x + (static_cast<double>(col) + 0.5) * pixel_size,
                origin_y - (static_cast<double>(row) + 0.5) * pixel_size};
    }

    bool is_nodata(float v) const noexcept;

    /// nullptr if absent.
    const Band* find_band(std::string_view name) const noexcept;
    /// Throws InvalidArgument naming the band if absent.
    const Band& band(std::string_view name) const;

    void add_band(std::string name, std::vector<float> values);
};

/// Checks pixel_size, band sizes and name uniqueness; throws DataError.
void validate(const Raster& raster);

/// Per-pixel (nir - red) / (nir + red); 0 where the sum is 0; nodata
/// propagates. Throws InvalidArgument on a size mismatch.
std::vector<float> ndvi(std::span<const float> red, std::span<const float> nir,
                        std::optional<float> nodata = std::nullopt);

/// Adds an "ndvi" band computed from the named bands.
void add_ndvi_band(Raster& raster, std::string_view red = "red", std::string_view nir = "nir");

/// Threshold comparison applied to pixel values.
struct Threshold {
    enum class Op { ge, gt, le, lt };
    Op op = Op::ge;
    double value = 0.0;

    bool operator()(double v) const noexcept
    {
        switch (op) {
        case Op::ge: return v >= value;
        case Op::gt: return v > value;
        case Op::le: return v <= value;
        case Op::lt: return v < value;
        }
        return false;
    }

    Threshold negated() const noexcept;
};

/// Pixels whose centers fall in a rectangle (half-open); [begin, end) ranges.
struct PixelWindow {
    std::size_t row_begin = 0, row_end = 0;
    std::size_t col_begin = 0, col_end = 0;

    bool empty() const noexcept { return row_begin >= row_end || col_begin >= col_end; }
    std::size_t size() const noexcept
    {
        return empty() ? 0 : (row_end - row_begin) * (col_end - col_begin);
    }
};

PixelWindow pixel_window(const Raster& raster, const Rect& rect);

struct PixelFraction {
    double fraction = 0.0;
    std::size_t matched = 0;
    std::size_t valid = 0;   // non-nodata pixels whose centers fall in the rect
    std::size_t missing = 0; // rect pixel slots outside the raster (estimate)
    bool empty = false;      // no valid pixel: fraction reported as 0
};

/// Among valid pixels centered in rect, the fraction satisfying pred.
/// Throws InvalidArgument for an unknown band.
PixelFraction pixel_fraction(const Raster& raster, std::string_view band, const Rect& rect,
                             Threshold pred);

struct PixelMean {
    double mean = 0.0;
    std::size_t valid = 0;
    std::size_t missing = 0;
    bool empty = false;
};

/// Mean of valid pixels centered in rect.
PixelMean pixel_mean(const Raster& raster, std::string_view band, const Rect& rect);

// Portable grid file:
//
//   FAVMAP-GRID 1
//   origin_x <meters>
//   origin_y <meters>
//   pixel_size <meters>
//   width <pixels>
//   height <pixels>
//   nodata <value|none>
//   bands <name> [<name> ...]
//   end
//   <width*height little-endian float32 per band, band after band, row-major>
Raster read_raster(const std::filesystem::path& path);
void write_raster(const Raster& raster, const std::filesystem::path& path);

} // namespace favmap
