#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "vitalcam/fer/ops.hpp"
#include "vitalcam/frame.hpp"

namespace vitalcam::fer {

enum class LayerKind : uint8_t {
    conv = 0,
    depthwise_conv = 1,
    pointwise_conv = 2,
    batch_norm = 3,
    relu = 4,
    global_avg_pool = 5,
    softmax = 6,
    residual_add = 7,
    max_pool = 8,
};

// Layer flags. `tap` snapshots the running tensor as the residual branch
// input before this layer executes; `side` routes the layer onto that branch
// instead of the main path. residual_add folds the branch back in.
inline constexpr uint32_t kFlagBias = 1u << 0;
inline constexpr uint32_t kFlagTap = 1u << 1;
inline constexpr uint32_t kFlagSide = 1u << 2;

inline constexpr float kBatchNormEps = 1e-3f;

struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    int kernel = 0;   // D (spatial extent) for conv/depthwise/max_pool
    int stride = 1;
    Padding padding = Padding::same;
    int in_channels = 0;   // M; for batch_norm this is C
    int out_channels = 0;  // N
    uint32_t flags = 0;

    bool has_bias() const { return flags & kFlagBias; }
    bool tap() const { return flags & kFlagTap; }
    bool side() const { return flags & kFlagSide; }
};

struct Layer {
    LayerSpec spec;
    // Flat payload, layout per kind:
    //   conv:       N*M*D*D weights ([n][m][ky][kx]) then N biases if flagged
    //   depthwise:  M*D*D kernels ([m][ky][kx]) then M biases if flagged
    //   pointwise:  N*M weights ([n][m]) then N biases if flagged
    //   batch_norm: gamma, beta, mean, var, each length C
    //   others:     empty
    std::vector<float> payload;
};

inline const std::array<std::string, 7>& emotion_labels() {
    static const std::array<std::string, 7> labels = {
        "Angry", "Disgust", "Fear", "Happy", "Sad", "Surprise", "Neutral"};
    return labels;
}

struct EmotionDistribution {
    std::array<double, 7> p{};

    int argmax() const {
        int best = 0;
        for (int i = 1; i < 7; ++i)
            if (p[static_cast<size_t>(i)] > p[static_cast<size_t>(best)]) best = i;
        return best;
    }
};

namespace detail {

inline size_t expected_payload(const LayerSpec& s) {
    const size_t d = static_cast<size_t>(s.kernel);
    const size_t m = static_cast<size_t>(s.in_channels);
    const size_t n = static_cast<size_t>(s.out_channels);
    switch (s.kind) {
        case LayerKind::conv: return n * m * d * d + (s.has_bias() ? n : 0);
        case LayerKind::depthwise_conv: return m * d * d + (s.has_bias() ? m : 0);
        case LayerKind::pointwise_conv: return n * m + (s.has_bias() ? n : 0);
        case LayerKind::batch_norm: return 4 * m;
        default: return 0;
    }
}

}  // namespace detail

// Inference network: an ordered layer list whose tap/side flags encode
// residual skip edges. Input contract is a 48x48 single-channel map in
// [-1, 1]; output is a 7-way distribution.
class Model {
public:
    static constexpr int kInputSize = 48;
    static constexpr int kClasses = 7;

    std::vector<Layer> layers;

    // Walks the graph symbolically; throws ShapeCheckFailed naming the first
    // offending layer.
    void shape_check() const {
        Shape cur{kInputSize, kInputSize, 1};
        std::optional<Shape> branch;
        for (size_t i = 0; i < layers.size(); ++i) {
            const Layer& layer = layers[i];
            const LayerSpec& s = layer.spec;
            if (layer.payload.size() != detail::expected_payload(s))
                throw error(errc::shape_check_failed,
                            "layer " + std::to_string(i) + ": payload size mismatch",
                            static_cast<long>(i));
            if (s.tap()) branch = cur;
            Shape in = s.side() ? (branch ? *branch
                                          : throw error(errc::shape_check_failed,
                                                        "layer " + std::to_string(i) +
                                                            ": side layer without a tap",
                                                        static_cast<long>(i)))
                                : cur;
            Shape out = in;
            try {
                out = infer_shape(s, in);
            } catch (const error&) {
                throw error(errc::shape_check_failed,
                            "layer " + std::to_string(i) + ": incompatible shape",
                            static_cast<long>(i));
            }
            if (s.kind == LayerKind::residual_add) {
                if (!branch || !(cur == *branch))
                    throw error(errc::shape_check_failed,
                                "layer " + std::to_string(i) + ": branch shape mismatch",
                                static_cast<long>(i));
                branch.reset();
            }
            if (s.side())
                branch = out;
            else
                cur = out;
        }
        if (!(cur == Shape{1, 1, kClasses}))
            throw error(errc::shape_check_failed, "network does not end in a 7-way head",
                        static_cast<long>(layers.size()));
    }

    Tensor forward(const Tensor& input) const {
        Tensor cur = input;
        std::optional<Tensor> branch;
        for (const Layer& layer : layers) {
            const LayerSpec& s = layer.spec;
            if (s.tap()) branch = cur;
            if (s.kind == LayerKind::residual_add) {
                cur = residual_add(cur, *branch);
                branch.reset();
                continue;
            }
            const Tensor& in = s.side() ? *branch : cur;
            Tensor out = apply(layer, in);
            if (s.side())
                branch = std::move(out);
            else
                cur = std::move(out);
        }
        return cur;
    }

    // Every stored scalar: conv weights and biases plus the four batch-norm
    // vectors.
    size_t param_count() const {
        size_t total = 0;
        for (const Layer& layer : layers) total += layer.payload.size();
        return total;
    }

private:
    static Shape infer_shape(const LayerSpec& s, Shape in) {
        auto plan = [&](int extent, int kernel) {
            return ops_plan(extent, kernel, s.stride, s.padding);
        };
        switch (s.kind) {
            case LayerKind::conv: {
                check(s.in_channels == in.c, "conv in-channel mismatch");
                Shape out{plan(in.h, s.kernel), plan(in.w, s.kernel), s.out_channels};
                check(out.h >= 1 && out.w >= 1, "conv output collapsed");
                return out;
            }
            case LayerKind::depthwise_conv: {
                check(s.in_channels == in.c && s.out_channels == in.c,
                      "depthwise channel mismatch");
                Shape out{plan(in.h, s.kernel), plan(in.w, s.kernel), in.c};
                check(out.h >= 1 && out.w >= 1, "depthwise output collapsed");
                return out;
            }
            case LayerKind::pointwise_conv: {
                check(s.in_channels == in.c, "pointwise in-channel mismatch");
                return Shape{(in.h + s.stride - 1) / s.stride,
                             (in.w + s.stride - 1) / s.stride, s.out_channels};
            }
            case LayerKind::batch_norm:
                check(s.in_channels == in.c, "batch norm channel mismatch");
                return in;
            case LayerKind::relu:
                return in;
            case LayerKind::max_pool: {
                Shape out{plan(in.h, s.kernel), plan(in.w, s.kernel), in.c};
                check(out.h >= 1 && out.w >= 1, "pool output collapsed");
                return out;
            }
            case LayerKind::global_avg_pool:
                return Shape{1, 1, in.c};
            case LayerKind::softmax:
                return in;
            case LayerKind::residual_add:
                return in;
        }
        throw error(errc::shape_mismatch, "unknown layer kind");
    }

    static int ops_plan(int extent, int kernel, int stride, Padding padding) {
        return fer::detail::plan_axis(extent, kernel, stride, padding).out;
    }

    static void check(bool ok, const char* what) {
        if (!ok) throw error(errc::shape_mismatch, what);
    }

    static Tensor apply(const Layer& layer, const Tensor& in) {
        const LayerSpec& s = layer.spec;
        const std::span<const float> payload(layer.payload);
        switch (s.kind) {
            case LayerKind::conv: {
                const size_t wn = static_cast<size_t>(s.out_channels) * s.in_channels *
                                  s.kernel * s.kernel;
                return conv2d(in, payload.subspan(0, wn),
                              s.has_bias() ? payload.subspan(wn) : std::span<const float>{},
                              s.kernel, s.stride, s.padding, s.out_channels);
            }
            case LayerKind::depthwise_conv: {
                const size_t wn = static_cast<size_t>(s.in_channels) * s.kernel * s.kernel;
                return depthwise_conv2d(
                    in, payload.subspan(0, wn),
                    s.has_bias() ? payload.subspan(wn) : std::span<const float>{}, s.kernel,
                    s.stride, s.padding);
            }
            case LayerKind::pointwise_conv: {
                const size_t wn = static_cast<size_t>(s.out_channels) * s.in_channels;
                return pointwise_conv2d(
                    in, payload.subspan(0, wn),
                    s.has_bias() ? payload.subspan(wn) : std::span<const float>{},
                    s.out_channels, s.stride);
            }
            case LayerKind::batch_norm: {
                const size_t c = static_cast<size_t>(s.in_channels);
                return batch_norm(in, payload.subspan(0, c), payload.subspan(c, c),
                                  payload.subspan(2 * c, c), payload.subspan(3 * c, c),
                                  kBatchNormEps);
            }
            case LayerKind::relu: return relu(in);
            case LayerKind::max_pool: return max_pool(in, s.kernel, s.stride, s.padding);
            case LayerKind::global_avg_pool: return global_avg_pool(in);
            case LayerKind::softmax: return softmax(in);
            case LayerKind::residual_add: break;
        }
        throw error(errc::shape_mismatch, "unknown layer kind");
    }
};

// Full forward pass on a 48x48 face plane with [0,255] values, normalized
// internally to [-1, 1] via x/127.5 - 1.
inline EmotionDistribution classify(const Model& model, const GrayPlane& face) {
    if (face.width != Model::kInputSize || face.height != Model::kInputSize)
        throw error(errc::wrong_input_size, "classifier input must be 48x48");
    Tensor in(Model::kInputSize, Model::kInputSize, 1);
    for (size_t i = 0; i < face.values.size(); ++i)
        in.data[i] = static_cast<float>(face.values[i] / 127.5 - 1.0);
    Tensor out = model.forward(in);
    if (out.size() != Model::kClasses)
        throw error(errc::shape_mismatch, "model head does not produce 7 values");
    EmotionDistribution dist;
    for (int i = 0; i < Model::kClasses; ++i)
        dist.p[static_cast<size_t>(i)] = out.data[static_cast<size_t>(i)];
    return dist;
}

inline size_t param_count(const Model& model) { return model.param_count(); }

}  // namespace vitalcam::fer
