#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vitalcam/error.hpp"

namespace vitalcam {

// Raw 8-bit RGB video frame. Pixels are row-major interleaved triples with no
// padding and no alpha; this byte layout is the wire contract shared with the
// streaming service and the RVID file format.
struct Frame {
    uint32_t width = 0;
    uint32_t height = 0;
    uint32_t timestamp_ms = 0;
    std::vector<uint8_t> pixels;  // width * height * 3

    bool valid() const {
        return width >= 8 && height >= 8 &&
               pixels.size() == static_cast<size_t>(width) * height * 3;
    }
};

// Scalar image plane, nominal range [0, 255].
struct GrayPlane {
    uint32_t width = 0;
    uint32_t height = 0;
    std::vector<double> values;  // width * height, row-major

    GrayPlane() = default;
    GrayPlane(uint32_t w, uint32_t h, double fill = 0.0)
        : width(w), height(h), values(static_cast<size_t>(w) * h, fill) {}

    double at(uint32_t x, uint32_t y) const { return values[static_cast<size_t>(y) * width + x]; }
    double& at(uint32_t x, uint32_t y) { return values[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return values.size(); }
};

struct Roi {
    int32_t x = 0;
    int32_t y = 0;
    int32_t w = 0;
    int32_t h = 0;

    int64_t area() const { return static_cast<int64_t>(w) * h; }
    bool operator==(const Roi&) const = default;
};

struct TimeSeries {
    double sample_rate_hz = 0.0;
    std::vector<double> values;
};

enum class Channel { R = 0, G = 1, B = 2 };

namespace detail {

// Round to nearest and clamp to the 8-bit pixel range.
inline uint8_t quantize_u8(double v) {
    const double r = std::nearbyint(v);
    return static_cast<uint8_t>(r < 0.0 ? 0.0 : (r > 255.0 ? 255.0 : r));
}

}  // namespace detail

// Rec.601 luma. Weights sum to 1, so output stays in [0, 255].
inline GrayPlane to_grayscale(const Frame& f) {
    GrayPlane out(f.width, f.height);
    const uint8_t* p = f.pixels.data();
    for (size_t i = 0; i < out.values.size(); ++i, p += 3)
        out.values[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    return out;
}

inline GrayPlane extract_channel(const Frame& f, Channel c) {
    GrayPlane out(f.width, f.height);
    const uint8_t* p = f.pixels.data() + static_cast<int>(c);
    for (size_t i = 0; i < out.values.size(); ++i, p += 3)
        out.values[i] = *p;
    return out;
}

// Intersects r with the plane bounds. Zero overlap is EmptyRegion.
inline Roi clamp_roi(const Roi& r, uint32_t width, uint32_t height) {
    int32_t x0 = std::max(r.x, 0);
    int32_t y0 = std::max(r.y, 0);
    int32_t x1 = std::min<int64_t>(static_cast<int64_t>(r.x) + r.w, width);
    int32_t y1 = std::min<int64_t>(static_cast<int64_t>(r.y) + r.h, height);
    return Roi{x0, y0, x1 - x0, y1 - y0};
}

inline GrayPlane crop(const GrayPlane& p, const Roi& r) {
    Roi c = clamp_roi(r, p.width, p.height);
    if (c.w <= 0 || c.h <= 0)
        throw error(errc::empty_region, "roi does not overlap the plane");
    GrayPlane out(static_cast<uint32_t>(c.w), static_cast<uint32_t>(c.h));
    for (int32_t y = 0; y < c.h; ++y) {
        const double* src = &p.values[static_cast<size_t>(c.y + y) * p.width + c.x];
        std::copy(src, src + c.w, &out.values[static_cast<size_t>(y) * c.w]);
    }
    return out;
}

// Bilinear resampling with the half-pixel-center convention: output pixel
// centers map to input coordinates (i + 0.5) * in/out - 0.5, clamped at the
// borders. Resizing to the same size reproduces the input exactly.
inline GrayPlane resize_bilinear(const GrayPlane& p, uint32_t w, uint32_t h) {
    if (w < 1 || h < 1)
        throw error(errc::invalid_argument, "target size must be at least 1x1");
    if (w == p.width && h == p.height) return p;
    GrayPlane out(w, h);
    const double sx = static_cast<double>(p.width) / w;
    const double sy = static_cast<double>(p.height) / h;
    for (uint32_t oy = 0; oy < h; ++oy) {
        double fy = (oy + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(p.height - 1));
        uint32_t y0 = static_cast<uint32_t>(fy);
        uint32_t y1 = std::min(y0 + 1, p.height - 1);
        double wy = fy - y0;
        for (uint32_t ox = 0; ox < w; ++ox) {
            double fx = (ox + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(p.width - 1));
            uint32_t x0 = static_cast<uint32_t>(fx);
            uint32_t x1 = std::min(x0 + 1, p.width - 1);
            double wx = fx - x0;
            double top = p.at(x0, y0) * (1.0 - wx) + p.at(x1, y0) * wx;
            double bot = p.at(x0, y1) * (1.0 - wx) + p.at(x1, y1) * wx;
            out.at(ox, oy) = top * (1.0 - wy) + bot * wy;
        }
    }
    return out;
}

inline double mean(const GrayPlane& p) {
    double s = 0.0;
    for (double v : p.values) s += v;
    return p.values.empty() ? 0.0 : s / static_cast<double>(p.values.size());
}

}  // namespace vitalcam
