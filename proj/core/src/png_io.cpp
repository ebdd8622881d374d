#include "poselab/png_io.hpp"

#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

#include <png.h>

namespace poselab {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& what, const std::string& path) {
    throw std::runtime_error("png: " + what + ": " + path);
}

void write_png(const std::string& path, int width, int height, int color_type, int bit_depth,
               const std::vector<png_bytep>& rows) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) fail("cannot open for writing", path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail("write failed", path);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);  // buffers are host (little) endian
    png_write_image(png, const_cast<png_bytep*>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void read_png(const std::string& path, int expect_color, int expect_depth, int& width, int& height,
              std::vector<std::uint8_t>& out, int bytes_per_pixel) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) fail("cannot open", path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("read failed", path);
    }
    png_init_io(png, f.get());
    png_read_info(png, info);
    width = int(png_get_image_width(png, info));
    height = int(png_get_image_height(png, info));
    if (png_get_color_type(png, info) != expect_color ||
        png_get_bit_depth(png, info) != expect_depth) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("unexpected format", path);
    }
    if (expect_depth == 16) png_set_swap(png);
    out.resize(std::size_t(width) * height * bytes_per_pixel);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = out.data() + std::size_t(y) * width * bytes_per_pixel;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
}

}  // namespace

void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb) {
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(rgb.data() + std::size_t(y) * width * 3);
    write_png(path, width, height, PNG_COLOR_TYPE_RGB, 8, rows);
}

std::vector<std::uint8_t> read_png_rgb8(const std::string& path, int& width, int& height) {
    std::vector<std::uint8_t> out;
    read_png(path, PNG_COLOR_TYPE_RGB, 8, width, height, out, 3);
    return out;
}

void write_png_gray8(const std::string& path, int width, int height,
                     const std::vector<std::uint8_t>& gray) {
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(gray.data() + std::size_t(y) * width);
    write_png(path, width, height, PNG_COLOR_TYPE_GRAY, 8, rows);
}

std::vector<std::uint8_t> read_png_gray8(const std::string& path, int& width, int& height) {
    std::vector<std::uint8_t> out;
    read_png(path, PNG_COLOR_TYPE_GRAY, 8, width, height, out, 1);
    return out;
}

void write_png_gray16(const std::string& path, int width, int height,
                      const std::vector<std::uint16_t>& gray) {
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(
            reinterpret_cast<const png_byte*>(gray.data() + std::size_t(y) * width));
    write_png(path, width, height, PNG_COLOR_TYPE_GRAY, 16, rows);
}

std::vector<std::uint16_t> read_png_gray16(const std::string& path, int& width, int& height) {
    std::vector<std::uint8_t> raw;
    read_png(path, PNG_COLOR_TYPE_GRAY, 16, width, height, raw, 2);
    std::vector<std::uint16_t> out(std::size_t(width) * height);
    std::memcpy(out.data(), raw.data(), raw.size());
    return out;
}

}  // namespace poselab
