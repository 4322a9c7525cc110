#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tangram/geometry.hpp"

namespace tangram {

inline constexpr int kDefaultResolution = 512;

// Square binary occupancy grid over the [0,10]^2 canvas, one bit per pixel.
// Row 0 is the top of the image: world (0,0) maps to the top-left pixel and
// (10,10) to the bottom-right (y-down image convention).
class RasterMask {
public:
    RasterMask() = default;
    explicit RasterMask(int resolution);

    int resolution() const { return resolution_; }
    double pixel_size() const { return kCanvasSide / resolution_; }
    int words_per_row() const { return words_per_row_; }

    bool test(int row, int col) const;
    void set(int row, int col);
    void fill_span(int row, int col_begin, int col_end); // half-open [begin,end)

    std::int64_t popcount() const;
    bool empty() const { return popcount() == 0; }

    const std::vector<std::uint64_t>& words() const { return words_; }
    std::vector<std::uint64_t>& words() { return words_; }

    bool operator==(const RasterMask& other) const = default;

private:
    int resolution_ = 0;
    int words_per_row_ = 0;
    std::vector<std::uint64_t> words_;
};

// Pixel-center-inside fill of the union of polygons (even-odd per polygon,
// half-open top-left boundary rule). resolution must be >= 64.
RasterMask rasterize(std::span<const Polygon> polys, int resolution = kDefaultResolution);
RasterMask rasterize(const Polygon& poly, int resolution = kDefaultResolution);

// Binary dilation with a 3x3 cross structuring element, applied radius_px
// times. radius_px must be in {0,1,2}.
RasterMask dilate(const RasterMask& m, int radius_px);

// IoU of the two masks after dilating both by dilation_px.
// Empty vs empty is 1.0; exactly one empty is 0.0.
double raster_iou(const RasterMask& a, const RasterMask& b, int dilation_px = 0);

// Rasterized IoU between the unions of the realized placements.
double union_iou(std::span<const Placement> pred, std::span<const Placement> gt,
                 int dilation_px = 0, int resolution = kDefaultResolution);

namespace detail {
// Popcount-based IoU of two already-dilated masks; shared fast path.
double mask_iou(const RasterMask& a, const RasterMask& b);
} // namespace detail

} // namespace tangram
