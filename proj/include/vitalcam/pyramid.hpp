#pragma once

#include <cstdint>
#include <vector>

#include "vitalcam/frame.hpp"

namespace vitalcam {

// Burt–Adelson binomial kernel [1,4,6,4,1]/16, applied separably with
// edge-replicate padding.
namespace detail {

inline constexpr double kPyrKernel[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

inline uint32_t half_up(uint32_t n) { return (n + 1) / 2; }

inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

}  // namespace detail

struct GaussianPyramid {
    std::vector<GrayPlane> levels;  // levels[0] is the input resolution
};

struct LaplacianPyramid {
    std::vector<GrayPlane> bands;  // bands[k] = gaussian_k - upsample(gaussian_{k+1})
    GrayPlane residual;            // coarsest gaussian level
};

// Blur with the binomial kernel, then keep every second sample starting at
// index 0. Output is ceil(w/2) x ceil(h/2).
inline GrayPlane blur_downsample(const GrayPlane& p) {
    if (p.width < 2 || p.height < 2)
        throw error(errc::too_small, "plane must be at least 2x2");
    const int w = static_cast<int>(p.width), h = static_cast<int>(p.height);
    const uint32_t ow = detail::half_up(p.width), oh = detail::half_up(p.height);

    // Horizontal pass, decimating columns.
    GrayPlane tmp(ow, p.height);
    for (int y = 0; y < h; ++y) {
        const double* row = &p.values[static_cast<size_t>(y) * w];
        double* dst = &tmp.values[static_cast<size_t>(y) * ow];
        for (uint32_t ox = 0; ox < ow; ++ox) {
            const int cx = static_cast<int>(ox) * 2;
            double acc = 0.0;
            for (int t = -2; t <= 2; ++t)
                acc += detail::kPyrKernel[t + 2] * row[detail::clamp_index(cx + t, w)];
            dst[ox] = acc;
        }
    }
    // Vertical pass, decimating rows.
    GrayPlane out(ow, oh);
    for (uint32_t oy = 0; oy < oh; ++oy) {
        const int cy = static_cast<int>(oy) * 2;
        for (uint32_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = -2; t <= 2; ++t)
                acc += detail::kPyrKernel[t + 2] * tmp.at(x, detail::clamp_index(cy + t, h));
            out.at(x, oy) = acc;
        }
    }
    return out;
}

// Burt–Adelson expand: out[i] = 2 * sum over kernel taps m with (i - m) even
// of k[m] * in[(i - m) / 2], source indices clamped (replicate). The target
// size must halve back to the source size.
inline GrayPlane upsample(const GrayPlane& p, uint32_t target_w, uint32_t target_h) {
    if (detail::half_up(target_w) != p.width || detail::half_up(target_h) != p.height)
        throw error(errc::dimension_mismatch, "target dims are not one doubling of the source");
    const int sw = static_cast<int>(p.width), sh = static_cast<int>(p.height);

    // Horizontal expand.
    GrayPlane tmp(target_w, p.height);
    for (int y = 0; y < sh; ++y) {
        const double* row = &p.values[static_cast<size_t>(y) * sw];
        double* dst = &tmp.values[static_cast<size_t>(y) * target_w];
        for (uint32_t ox = 0; ox < target_w; ++ox) {
            double acc = 0.0;
            for (int m = -2; m <= 2; ++m) {
                const int idx = static_cast<int>(ox) - m;
                if (idx & 1) continue;
                acc += detail::kPyrKernel[m + 2] * row[detail::clamp_index(idx / 2, sw)];
            }
            dst[ox] = 2.0 * acc;
        }
    }
    // Vertical expand.
    GrayPlane out(target_w, target_h);
    for (uint32_t oy = 0; oy < target_h; ++oy) {
        for (uint32_t x = 0; x < target_w; ++x) {
            double acc = 0.0;
            for (int m = -2; m <= 2; ++m) {
                const int idx = static_cast<int>(oy) - m;
                if (idx & 1) continue;
                acc += detail::kPyrKernel[m + 2] * tmp.at(x, detail::clamp_index(idx / 2, sh));
            }
            out.at(x, oy) = 2.0 * acc;
        }
    }
    return out;
}

// Largest level count such that the coarsest gaussian stays at least 2x2.
inline int max_levels(uint32_t w, uint32_t h) {
    int n = 0;
    while (detail::half_up(w) >= 2 && detail::half_up(h) >= 2) {
        w = detail::half_up(w);
        h = detail::half_up(h);
        ++n;
    }
    return n;
}

inline GaussianPyramid build_gaussian(const GrayPlane& p, int levels) {
    if (levels < 0 || levels > max_levels(p.width, p.height))
        throw error(errc::too_many_levels, "coarsest level would fall below 2x2");
    GaussianPyramid pyr;
    pyr.levels.reserve(static_cast<size_t>(levels) + 1);
    pyr.levels.push_back(p);
    for (int k = 0; k < levels; ++k)
        pyr.levels.push_back(blur_downsample(pyr.levels.back()));
    return pyr;
}

inline LaplacianPyramid build_laplacian(const GrayPlane& p, int levels) {
    if (levels < 1 || levels > max_levels(p.width, p.height))
        throw error(errc::too_many_levels, "coarsest level would fall below 2x2");
    GaussianPyramid g = build_gaussian(p, levels);
    LaplacianPyramid out;
    out.bands.reserve(static_cast<size_t>(levels));
    for (int k = 0; k < levels; ++k) {
        const GrayPlane& fine = g.levels[static_cast<size_t>(k)];
        GrayPlane up = upsample(g.levels[static_cast<size_t>(k) + 1], fine.width, fine.height);
        GrayPlane band(fine.width, fine.height);
        for (size_t i = 0; i < band.values.size(); ++i)
            band.values[i] = fine.values[i] - up.values[i];
        out.bands.push_back(std::move(band));
    }
    out.residual = std::move(g.levels.back());
    return out;
}

// Fold from the residual upward: acc = band_k + upsample(acc).
inline GrayPlane collapse_laplacian(const LaplacianPyramid& pyr) {
    GrayPlane acc = pyr.residual;
    for (size_t k = pyr.bands.size(); k-- > 0;) {
        const GrayPlane& band = pyr.bands[k];
        GrayPlane up = upsample(acc, band.width, band.height);
        for (size_t i = 0; i < up.values.size(); ++i)
            up.values[i] += band.values[i];
        acc = std::move(up);
    }
    return acc;
}

}  // namespace vitalcam
