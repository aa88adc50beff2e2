#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grudepth/tensor.hpp"

namespace grudepth {

// 8-bit RGB image, planar 3xHxW to match the tensor layout.
struct Image8 {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;  // 3 * height * width, channel-major

    Image8() = default;
    Image8(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(3) * h * w, 0) {}

    std::uint8_t& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    std::uint8_t at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    bool operator==(const Image8&) const = default;
};

// 8-bit single-channel image (depth maps).
struct Gray8 {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;

    Gray8() = default;
    Gray8(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0) {}

    std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
    bool operator==(const Gray8&) const = default;
};

// Binary PPM (P6) / PGM (P5), maxval 255.
void write_ppm(const std::string& path, const Image8& img);
Image8 read_ppm(const std::string& path);
void write_pgm(const std::string& path, const Gray8& img);
Gray8 read_pgm(const std::string& path);

// Pixel mapping between 8-bit images and the network's [-1,1] domain:
// x/127.5 - 1 in, (o+1)*127.5 rounded out.
Tensor normalize_rgb(const Image8& img);
Tensor normalize_depth_target(const Gray8& depth);  // replicated to 3 channels
Gray8 prediction_to_gray(const Tensor& pred);       // channel-averaged, rounded, clamped

std::uint8_t to_pixel(float v);  // single-value mapping for (o+1)*127.5

}  // namespace grudepth
