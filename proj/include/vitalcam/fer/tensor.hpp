#pragma once

#include <cstdint>
#include <vector>

#include "vitalcam/error.hpp"

namespace vitalcam::fer {

// Dense feature map, row-major with channel fastest: data[(y*w + x)*c + ch].
struct Tensor {
    int h = 0;
    int w = 0;
    int c = 0;
    std::vector<float> data;

    Tensor() = default;
    Tensor(int height, int width, int channels, float fill = 0.0f)
        : h(height), w(width), c(channels),
          data(static_cast<size_t>(height) * width * channels, fill) {}

    float at(int y, int x, int ch) const {
        return data[(static_cast<size_t>(y) * w + x) * c + ch];
    }
    float& at(int y, int x, int ch) {
        return data[(static_cast<size_t>(y) * w + x) * c + ch];
    }

    size_t size() const { return data.size(); }
    bool same_shape(const Tensor& o) const { return h == o.h && w == o.w && c == o.c; }
};

struct Shape {
    int h = 0, w = 0, c = 0;
    bool operator==(const Shape&) const = default;
};

}  // namespace vitalcam::fer
