#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "vitalcam/fer/tensor.hpp"

namespace vitalcam::fer {

enum class Padding { valid = 0, same = 1 };

namespace detail {

// Output extent and leading pad for one axis. 'same' splits the total pad
// evenly, putting the extra cell after (top-left bias).
struct AxisPlan {
    int out = 0;
    int pad_before = 0;
};

inline AxisPlan plan_axis(int in, int kernel, int stride, Padding padding) {
    AxisPlan p;
    if (padding == Padding::same) {
        p.out = (in + stride - 1) / stride;
        const int pad_total = std::max(0, (p.out - 1) * stride + kernel - in);
        p.pad_before = pad_total / 2;
    } else {
        p.out = (in - kernel) / stride + 1;
        p.pad_before = 0;
    }
    return p;
}

}  // namespace detail

// Cross-correlation with weights laid out [n][m][ky][kx]; optional per-output
// bias. Accumulates in double for a deterministic, well-conditioned sum.
inline Tensor conv2d(const Tensor& input, std::span<const float> weights,
                     std::span<const float> bias, int kernel, int stride, Padding padding,
                     int out_channels) {
    if (kernel < 1 || (kernel % 2) == 0 || stride < 1 || out_channels < 1)
        throw error(errc::shape_mismatch, "bad conv geometry");
    const int m = input.c;
    if (weights.size() != static_cast<size_t>(out_channels) * m * kernel * kernel)
        throw error(errc::shape_mismatch, "conv weight count does not match geometry");
    if (!bias.empty() && bias.size() != static_cast<size_t>(out_channels))
        throw error(errc::shape_mismatch, "conv bias count does not match out channels");

    const auto py = detail::plan_axis(input.h, kernel, stride, padding);
    const auto px = detail::plan_axis(input.w, kernel, stride, padding);
    if (py.out < 1 || px.out < 1)
        throw error(errc::shape_mismatch, "kernel larger than input under valid padding");

    Tensor out(py.out, px.out, out_channels);
    const size_t kk = static_cast<size_t>(kernel) * kernel;
    for (int oy = 0; oy < py.out; ++oy) {
        const int y0 = oy * stride - py.pad_before;
        for (int ox = 0; ox < px.out; ++ox) {
            const int x0 = ox * stride - px.pad_before;
            for (int n = 0; n < out_channels; ++n) {
                const float* wbase = weights.data() + static_cast<size_t>(n) * m * kk;
                double acc = bias.empty() ? 0.0 : bias[static_cast<size_t>(n)];
                for (int ch = 0; ch < m; ++ch) {
                    const float* wch = wbase + static_cast<size_t>(ch) * kk;
                    for (int ky = 0; ky < kernel; ++ky) {
                        const int y = y0 + ky;
                        if (y < 0 || y >= input.h) continue;
                        for (int kx = 0; kx < kernel; ++kx) {
                            const int x = x0 + kx;
                            if (x < 0 || x >= input.w) continue;
                            acc += static_cast<double>(wch[ky * kernel + kx]) *
                                   input.at(y, x, ch);
                        }
                    }
                }
                out.at(oy, ox, n) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

// One kernel per input channel, laid out [m][ky][kx]; channel count preserved.
inline Tensor depthwise_conv2d(const Tensor& input, std::span<const float> kernels,
                               std::span<const float> bias, int kernel, int stride,
                               Padding padding) {
    const int m = input.c;
    if (kernels.size() != static_cast<size_t>(m) * kernel * kernel)
        throw error(errc::shape_mismatch, "depthwise kernel count must equal input channels");
    if (!bias.empty() && bias.size() != static_cast<size_t>(m))
        throw error(errc::shape_mismatch, "depthwise bias count mismatch");

    const auto py = detail::plan_axis(input.h, kernel, stride, padding);
    const auto px = detail::plan_axis(input.w, kernel, stride, padding);
    if (py.out < 1 || px.out < 1)
        throw error(errc::shape_mismatch, "kernel larger than input under valid padding");

    Tensor out(py.out, px.out, m);
    const size_t kk = static_cast<size_t>(kernel) * kernel;
    for (int oy = 0; oy < py.out; ++oy) {
        const int y0 = oy * stride - py.pad_before;
        for (int ox = 0; ox < px.out; ++ox) {
            const int x0 = ox * stride - px.pad_before;
            for (int ch = 0; ch < m; ++ch) {
                const float* k = kernels.data() + static_cast<size_t>(ch) * kk;
                double acc = bias.empty() ? 0.0 : bias[static_cast<size_t>(ch)];
                for (int ky = 0; ky < kernel; ++ky) {
                    const int y = y0 + ky;
                    if (y < 0 || y >= input.h) continue;
                    for (int kx = 0; kx < kernel; ++kx) {
                        const int x = x0 + kx;
                        if (x < 0 || x >= input.w) continue;
                        acc += static_cast<double>(k[ky * kernel + kx]) * input.at(y, x, ch);
                    }
                }
                out.at(oy, ox, ch) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

// Per-pixel linear map across channels; weights laid out [n][m]. A stride > 1
// subsamples pixel positions (used by downsampling shortcuts).
inline Tensor pointwise_conv2d(const Tensor& input, std::span<const float> weights,
                               std::span<const float> bias, int out_channels, int stride = 1) {
    const int m = input.c;
    if (weights.size() != static_cast<size_t>(out_channels) * m)
        throw error(errc::shape_mismatch, "pointwise weight count mismatch");
    if (!bias.empty() && bias.size() != static_cast<size_t>(out_channels))
        throw error(errc::shape_mismatch, "pointwise bias count mismatch");

    const int oh = (input.h + stride - 1) / stride;
    const int ow = (input.w + stride - 1) / stride;
    Tensor out(oh, ow, out_channels);
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
            for (int n = 0; n < out_channels; ++n) {
                const float* wrow = weights.data() + static_cast<size_t>(n) * m;
                double acc = bias.empty() ? 0.0 : bias[static_cast<size_t>(n)];
                for (int ch = 0; ch < m; ++ch)
                    acc += static_cast<double>(wrow[ch]) * input.at(oy * stride, ox * stride, ch);
                out.at(oy, ox, n) = static_cast<float>(acc);
            }
    return out;
}

// Inference-mode normalization with running statistics.
inline Tensor batch_norm(const Tensor& input, std::span<const float> gamma,
                         std::span<const float> beta, std::span<const float> mean,
                         std::span<const float> var, float eps) {
    const size_t c = static_cast<size_t>(input.c);
    if (gamma.size() != c || beta.size() != c || mean.size() != c || var.size() != c)
        throw error(errc::shape_mismatch, "batch norm parameter length mismatch");
    Tensor out(input.h, input.w, input.c);
    std::vector<float> scale(c), shift(c);
    for (size_t ch = 0; ch < c; ++ch) {
        const float inv = 1.0f / std::sqrt(var[ch] + eps);
        scale[ch] = gamma[ch] * inv;
        shift[ch] = beta[ch] - mean[ch] * scale[ch];
    }
    for (size_t i = 0; i < input.size(); ++i) {
        const size_t ch = i % c;
        out.data[i] = input.data[i] * scale[ch] + shift[ch];
    }
    return out;
}

inline Tensor relu(const Tensor& input) {
    Tensor out(input.h, input.w, input.c);
    for (size_t i = 0; i < input.size(); ++i) out.data[i] = std::max(0.0f, input.data[i]);
    return out;
}

inline Tensor max_pool(const Tensor& input, int kernel, int stride, Padding padding) {
    const auto py = detail::plan_axis(input.h, kernel, stride, padding);
    const auto px = detail::plan_axis(input.w, kernel, stride, padding);
    if (py.out < 1 || px.out < 1)
        throw error(errc::shape_mismatch, "pool window larger than input under valid padding");
    Tensor out(py.out, px.out, input.c);
    for (int oy = 0; oy < py.out; ++oy)
        for (int ox = 0; ox < px.out; ++ox)
            for (int ch = 0; ch < input.c; ++ch) {
                float best = -std::numeric_limits<float>::infinity();
                for (int ky = 0; ky < kernel; ++ky) {
                    const int y = oy * stride - py.pad_before + ky;
                    if (y < 0 || y >= input.h) continue;
                    for (int kx = 0; kx < kernel; ++kx) {
                        const int x = ox * stride - px.pad_before + kx;
                        if (x < 0 || x >= input.w) continue;
                        best = std::max(best, input.at(y, x, ch));
                    }
                }
                out.at(oy, ox, ch) = best;
            }
    return out;
}

inline Tensor global_avg_pool(const Tensor& input) {
    Tensor out(1, 1, input.c);
    const double inv = 1.0 / (static_cast<double>(input.h) * input.w);
    for (int ch = 0; ch < input.c; ++ch) {
        double acc = 0.0;
        for (int y = 0; y < input.h; ++y)
            for (int x = 0; x < input.w; ++x) acc += input.at(y, x, ch);
        out.at(0, 0, ch) = static_cast<float>(acc * inv);
    }
    return out;
}

// Numerically stable softmax over the channel axis, independently per pixel.
inline Tensor softmax(const Tensor& input) {
    Tensor out(input.h, input.w, input.c);
    for (int y = 0; y < input.h; ++y)
        for (int x = 0; x < input.w; ++x) {
            float mx = -std::numeric_limits<float>::infinity();
            for (int ch = 0; ch < input.c; ++ch) mx = std::max(mx, input.at(y, x, ch));
            double sum = 0.0;
            for (int ch = 0; ch < input.c; ++ch)
                sum += std::exp(static_cast<double>(input.at(y, x, ch)) - mx);
            for (int ch = 0; ch < input.c; ++ch)
                out.at(y, x, ch) = static_cast<float>(
                    std::exp(static_cast<double>(input.at(y, x, ch)) - mx) / sum);
        }
    return out;
}

inline Tensor residual_add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw error(errc::shape_mismatch, "residual branches have different shapes");
    Tensor out(a.h, a.w, a.c);
    for (size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] + b.data[i];
    return out;
}

}  // namespace vitalcam::fer
