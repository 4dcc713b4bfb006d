#pragma once

#include <cmath>
#include <vector>

#include "vitalcam/fer/model.hpp"
#include "vitalcam/rng.hpp"

namespace vitalcam::fer {

// Reference network: two 3x3 stem convs (8, 8), four residual blocks at
// widths 16/32/64/128 (each: two depthwise-separable 3x3 units with BN+ReLU,
// a 3x3 stride-2 max-pool on the main path and a stride-2 pointwise shortcut
// with BN), then a 3x3 conv to 7 channels, global average pooling and
// softmax. 58,423 stored scalars.
inline constexpr size_t kReferenceParamCount = 58423;

namespace detail {

inline void add_layer(Model& m, LayerSpec spec, std::vector<float> payload = {}) {
    m.layers.push_back(Layer{spec, std::move(payload)});
}

// He-style fan-in scaling keeps activations bounded through the stack.
inline std::vector<float> conv_weights(Rng& rng, size_t count, size_t fan_in) {
    std::vector<float> w(count);
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (float& v : w) v = static_cast<float>(rng.gaussian(0.0, scale));
    return w;
}

inline std::vector<float> identity_bn(int channels) {
    std::vector<float> p(static_cast<size_t>(channels) * 4, 0.0f);
    for (int i = 0; i < channels; ++i) {
        p[static_cast<size_t>(i)] = 1.0f;                          // gamma
        p[static_cast<size_t>(channels) * 3 + static_cast<size_t>(i)] = 1.0f;  // var
    }
    return p;
}

inline void add_bn(Model& m, Rng& rng, int channels, bool randomize) {
    std::vector<float> p = identity_bn(channels);
    if (randomize)
        for (int i = 0; i < channels; ++i)
            p[static_cast<size_t>(channels) + static_cast<size_t>(i)] =
                static_cast<float>(rng.gaussian(0.0, 0.1));  // beta
    add_layer(m, {LayerKind::batch_norm, 0, 1, Padding::same, channels, channels, 0},
              std::move(p));
}

inline void add_block(Model& m, Rng& rng, int in_ch, int out_ch) {
    // Main path, tapping the block input for the shortcut.
    add_layer(m, {LayerKind::depthwise_conv, 3, 1, Padding::same, in_ch, in_ch, kFlagTap},
              conv_weights(rng, static_cast<size_t>(in_ch) * 9, 9));
    add_layer(m, {LayerKind::pointwise_conv, 1, 1, Padding::same, in_ch, out_ch, 0},
              conv_weights(rng, static_cast<size_t>(out_ch) * in_ch, static_cast<size_t>(in_ch)));
    add_bn(m, rng, out_ch, true);
    add_layer(m, {LayerKind::relu, 0, 1, Padding::same, 0, 0, 0});
    add_layer(m, {LayerKind::depthwise_conv, 3, 1, Padding::same, out_ch, out_ch, 0},
              conv_weights(rng, static_cast<size_t>(out_ch) * 9, 9));
    add_layer(m, {LayerKind::pointwise_conv, 1, 1, Padding::same, out_ch, out_ch, 0},
              conv_weights(rng, static_cast<size_t>(out_ch) * out_ch,
                           static_cast<size_t>(out_ch)));
    add_bn(m, rng, out_ch, true);
    add_layer(m, {LayerKind::relu, 0, 1, Padding::same, 0, 0, 0});
    add_layer(m, {LayerKind::max_pool, 3, 2, Padding::same, 0, 0, 0});
    // Shortcut branch.
    add_layer(m, {LayerKind::pointwise_conv, 1, 2, Padding::same, in_ch, out_ch, kFlagSide},
              conv_weights(rng, static_cast<size_t>(out_ch) * in_ch, static_cast<size_t>(in_ch)));
    {
        std::vector<float> p = identity_bn(out_ch);
        add_layer(m, {LayerKind::batch_norm, 0, 1, Padding::same, out_ch, out_ch, kFlagSide},
                  std::move(p));
    }
    add_layer(m, {LayerKind::residual_add, 0, 1, Padding::same, 0, 0, 0});
}

}  // namespace detail

// Deterministic random-weight instance of the reference architecture. The
// same seed always produces the same model (and the same FERW bytes).
inline Model reference_model(uint64_t seed) {
    Rng rng(seed);
    Model m;
    detail::add_layer(m, {LayerKind::conv, 3, 1, Padding::same, 1, 8, 0},
                      detail::conv_weights(rng, 8 * 1 * 9, 9));
    detail::add_bn(m, rng, 8, true);
    detail::add_layer(m, {LayerKind::relu, 0, 1, Padding::same, 0, 0, 0});
    detail::add_layer(m, {LayerKind::conv, 3, 1, Padding::same, 8, 8, 0},
                      detail::conv_weights(rng, 8 * 8 * 9, 8 * 9));
    detail::add_bn(m, rng, 8, true);
    detail::add_layer(m, {LayerKind::relu, 0, 1, Padding::same, 0, 0, 0});

    detail::add_block(m, rng, 8, 16);
    detail::add_block(m, rng, 16, 32);
    detail::add_block(m, rng, 32, 64);
    detail::add_block(m, rng, 64, 128);

    std::vector<float> head = detail::conv_weights(rng, 7 * 128 * 9, 128 * 9);
    head.resize(head.size() + 7, 0.0f);  // zero biases
    detail::add_layer(m, {LayerKind::conv, 3, 1, Padding::same, 128, 7, kFlagBias},
                      std::move(head));
    detail::add_layer(m, {LayerKind::global_avg_pool, 0, 1, Padding::same, 0, 0, 0});
    detail::add_layer(m, {LayerKind::softmax, 0, 1, Padding::same, 0, 0, 0});

    m.shape_check();
    return m;
}

}  // namespace vitalcam::fer
