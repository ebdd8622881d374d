#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace poselab {

void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb);
std::vector<std::uint8_t> read_png_rgb8(const std::string& path, int& width, int& height);

/// 8-bit grayscale, used for masks.
void write_png_gray8(const std::string& path, int width, int height,
                     const std::vector<std::uint8_t>& gray);
std::vector<std::uint8_t> read_png_gray8(const std::string& path, int& width, int& height);

/// 16-bit grayscale, used for depth images.
void write_png_gray16(const std::string& path, int width, int height,
                      const std::vector<std::uint16_t>& gray);
std::vector<std::uint16_t> read_png_gray16(const std::string& path, int& width, int& height);

}  // namespace poselab
