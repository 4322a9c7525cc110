#include "tangram/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace tangram {

RasterMask::RasterMask(int resolution)
    : resolution_(resolution),
      words_per_row_((resolution + 63) / 64),
      words_(static_cast<size_t>(resolution) * words_per_row_, 0) {
    if (resolution < 1) {
        throw std::invalid_argument("raster resolution must be positive");
    }
}

bool RasterMask::test(int row, int col) const {
    const auto idx = static_cast<size_t>(row) * words_per_row_ + (col >> 6);
    return (words_[idx] >> (col & 63)) & 1u;
}

void RasterMask::set(int row, int col) {
    const auto idx = static_cast<size_t>(row) * words_per_row_ + (col >> 6);
    words_[idx] |= std::uint64_t{1} << (col & 63);
}

void RasterMask::fill_span(int row, int col_begin, int col_end) {
    col_begin = std::max(col_begin, 0);
    col_end = std::min(col_end, resolution_);
    if (col_begin >= col_end) {
        return;
    }
    std::uint64_t* base = words_.data() + static_cast<size_t>(row) * words_per_row_;
    const int w0 = col_begin >> 6;
    const int w1 = (col_end - 1) >> 6;
    const std::uint64_t first = ~std::uint64_t{0} << (col_begin & 63);
    const std::uint64_t last = ~std::uint64_t{0} >> (63 - ((col_end - 1) & 63));
    if (w0 == w1) {
        base[w0] |= first & last;
        return;
    }
    base[w0] |= first;
    for (int w = w0 + 1; w < w1; ++w) {
        base[w] = ~std::uint64_t{0};
    }
    base[w1] |= last;
}

std::int64_t RasterMask::popcount() const {
    std::int64_t n = 0;
    for (std::uint64_t w : words_) {
        n += std::popcount(w);
    }
    return n;
}

namespace {

void rasterize_into(RasterMask& mask, const Polygon& poly) {
    const int res = mask.resolution();
    const double px = mask.pixel_size();
    const size_t n = poly.size();
    if (n < 3) {
        return;
    }

    double ymin = poly[0].y;
    double ymax = poly[0].y;
    for (const Vec2& v : poly) {
        ymin = std::min(ymin, v.y);
        ymax = std::max(ymax, v.y);
    }
    const int row_begin = std::max(0, static_cast<int>(std::ceil(ymin / px - 0.5)));
    const int row_end = std::min(res - 1, static_cast<int>(std::floor(ymax / px - 0.5)));

    std::vector<double> xs;
    xs.reserve(8);
    for (int row = row_begin; row <= row_end; ++row) {
        const double yc = (row + 0.5) * px;
        xs.clear();
        for (size_t i = 0; i < n; ++i) {
            const Vec2& p = poly[i];
            const Vec2& q = poly[(i + 1) % n];
            // Half-open rule in y: an edge spans [min_y, max_y).
            if ((p.y <= yc) == (q.y <= yc)) {
                continue;
            }
            xs.push_back(p.x + (yc - p.y) * (q.x - p.x) / (q.y - p.y));
        }
        std::sort(xs.begin(), xs.end());
        for (size_t i = 0; i + 1 < xs.size(); i += 2) {
            // Pixel centers in [x0, x1): left edge inclusive, right exclusive.
            const int c0 = static_cast<int>(std::ceil(xs[i] / px - 0.5));
            const int c1 = static_cast<int>(std::ceil(xs[i + 1] / px - 0.5));
            mask.fill_span(row, c0, c1);
        }
    }
}

} // namespace

RasterMask rasterize(std::span<const Polygon> polys, int resolution) {
    if (resolution < 64) {
        throw std::invalid_argument("raster resolution must be >= 64");
    }
    RasterMask mask(resolution);
    for (const Polygon& poly : polys) {
        rasterize_into(mask, poly);
    }
    return mask;
}

RasterMask rasterize(const Polygon& poly, int resolution) {
    return rasterize(std::span<const Polygon>(&poly, 1), resolution);
}

RasterMask dilate(const RasterMask& m, int radius_px) {
    if (radius_px < 0 || radius_px > 2) {
        throw std::invalid_argument("dilation radius must be in {0,1,2}");
    }
    RasterMask out = m;
    const int res = m.resolution();
    const int wpr = m.words_per_row();
    const int tail_bits = res & 63;
    const std::uint64_t tail_mask =
        tail_bits == 0 ? ~std::uint64_t{0} : (~std::uint64_t{0} >> (64 - tail_bits));

    std::vector<std::uint64_t> horiz(static_cast<size_t>(res) * wpr);
    for (int pass = 0; pass < radius_px; ++pass) {
        const auto& src = out.words();
        // Horizontal neighbours: shift each row left/right by one bit.
        for (int row = 0; row < res; ++row) {
            const std::uint64_t* in = src.data() + static_cast<size_t>(row) * wpr;
            std::uint64_t* dst = horiz.data() + static_cast<size_t>(row) * wpr;
            for (int w = 0; w < wpr; ++w) {
                std::uint64_t v = in[w];
                std::uint64_t left = v << 1;
                if (w > 0) {
                    left |= in[w - 1] >> 63;
                }
                std::uint64_t right = v >> 1;
                if (w + 1 < wpr) {
                    right |= in[w + 1] << 63;
                }
                std::uint64_t d = v | left | right;
                if (w == wpr - 1) {
                    d &= tail_mask;
                }
                dst[w] = d;
            }
        }
        // Vertical neighbours on the original bits, OR'd with the horizontal pass.
        RasterMask next(res);
        auto& nw = next.words();
        for (int row = 0; row < res; ++row) {
            const std::uint64_t* h = horiz.data() + static_cast<size_t>(row) * wpr;
            const std::uint64_t* up =
                row > 0 ? src.data() + static_cast<size_t>(row - 1) * wpr : nullptr;
            const std::uint64_t* down =
                row + 1 < res ? src.data() + static_cast<size_t>(row + 1) * wpr : nullptr;
            std::uint64_t* dst = nw.data() + static_cast<size_t>(row) * wpr;
            for (int w = 0; w < wpr; ++w) {
                std::uint64_t v = h[w];
                if (up) v |= up[w];
                if (down) v |= down[w];
                dst[w] = v;
            }
        }
        out = std::move(next);
    }
    return out;
}

namespace detail {

double mask_iou(const RasterMask& a, const RasterMask& b) {
    const auto& wa = a.words();
    const auto& wb = b.words();
    std::int64_t inter = 0;
    std::int64_t uni = 0;
    for (size_t i = 0; i < wa.size(); ++i) {
        inter += std::popcount(wa[i] & wb[i]);
        uni += std::popcount(wa[i] | wb[i]);
    }
    if (uni == 0) {
        return 1.0; // both empty: vacuous match
    }
    if (inter == 0) {
        return 0.0;
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace detail

double raster_iou(const RasterMask& a, const RasterMask& b, int dilation_px) {
    if (a.resolution() != b.resolution()) {
        throw std::invalid_argument("raster_iou requires equal resolutions");
    }
    if (dilation_px == 0) {
        return detail::mask_iou(a, b);
    }
    return detail::mask_iou(dilate(a, dilation_px), dilate(b, dilation_px));
}

double union_iou(std::span<const Placement> pred, std::span<const Placement> gt,
                 int dilation_px, int resolution) {
    if (pred.size() != gt.size()) {
        throw std::invalid_argument("union_iou requires equally many pieces");
    }
    std::vector<Polygon> pred_polys;
    std::vector<Polygon> gt_polys;
    pred_polys.reserve(pred.size());
    gt_polys.reserve(gt.size());
    for (const Placement& p : pred) {
        pred_polys.push_back(realize(p));
    }
    for (const Placement& p : gt) {
        gt_polys.push_back(realize(p));
    }
    return raster_iou(rasterize(pred_polys, resolution), rasterize(gt_polys, resolution),
                      dilation_px);
}

} // namespace tangram
