#pragma once

#include <cstdint>
#include <vector>

namespace poselab {

/// Row-major RGB image, values in [0,1].
struct ImageRGB {
    int width = 0, height = 0;
    std::vector<float> px;  // height*width*3

    ImageRGB() = default;
    ImageRGB(int w, int h) : width(w), height(h), px(std::size_t(w) * h * 3, 0.f) {}
    float& at(int x, int y, int c) { return px[(std::size_t(y) * width + x) * 3 + c]; }
    const float& at(int x, int y, int c) const { return px[(std::size_t(y) * width + x) * 3 + c]; }
};

/// Row-major depth image in mm, 0 = no measurement.
struct DepthImage {
    int width = 0, height = 0;
    std::vector<float> mm;

    DepthImage() = default;
    DepthImage(int w, int h) : width(w), height(h), mm(std::size_t(w) * h, 0.f) {}
    float& at(int x, int y) { return mm[std::size_t(y) * width + x]; }
    const float& at(int x, int y) const { return mm[std::size_t(y) * width + x]; }
};

/// Row-major binary mask, one byte per pixel.
using Mask = std::vector<std::uint8_t>;

}  // namespace poselab
