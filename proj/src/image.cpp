#include "grudepth/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "grudepth/errors.hpp"

namespace grudepth {

namespace {

void write_pnm_header(std::ofstream& out, const char* magic, int w, int h) {
    out << magic << "\n" << w << " " << h << "\n255\n";
}

// Reads the PNM header, skipping comments, and validates the magic.
void read_pnm_header(std::ifstream& in, const std::string& path, const char* magic, int& w,
                     int& h) {
    std::string m;
    in >> m;
    if (m != magic)
        throw IoError(path + ": unsupported magic number '" + m + "', expected " + magic);
    auto next_int = [&](int& v) {
        while (true) {
            in >> std::ws;
            if (in.peek() == '#') {
                std::string comment;
                std::getline(in, comment);
                continue;
            }
            if (!(in >> v)) throw IoError(path + ": malformed header");
            return;
        }
    };
    int maxval = 0;
    next_int(w);
    next_int(h);
    next_int(maxval);
    if (w <= 0 || h <= 0) throw IoError(path + ": non-positive image size");
    if (maxval != 255) throw IoError(path + ": only maxval 255 is supported");
    in.get();  // single whitespace byte before the raster
}

}  // namespace

void write_ppm(const std::string& path, const Image8& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_pnm_header(out, "P6", img.width, img.height);
    // planar -> interleaved raster
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) out.put(static_cast<char>(img.at(c, y, x)));
    if (!out) throw IoError("write failed for " + path);
}

Image8 read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    int w, h;
    read_pnm_header(in, path, "P6", w, h);
    Image8 img(h, w);
    std::vector<char> raster(static_cast<std::size_t>(3) * w * h);
    in.read(raster.data(), static_cast<std::streamsize>(raster.size()));
    if (in.gcount() != static_cast<std::streamsize>(raster.size()))
        throw IoError(path + ": truncated raster");
    std::size_t i = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) img.at(c, y, x) = static_cast<std::uint8_t>(raster[i++]);
    return img;
}

void write_pgm(const std::string& path, const Gray8& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_pnm_header(out, "P5", img.width, img.height);
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) throw IoError("write failed for " + path);
}

Gray8 read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    int w, h;
    read_pnm_header(in, path, "P5", w, h);
    Gray8 img(h, w);
    in.read(reinterpret_cast<char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.data.size()))
        throw IoError(path + ": truncated raster");
    return img;
}

Tensor normalize_rgb(const Image8& img) {
    Tensor t({3, img.height, img.width});
    for (std::size_t i = 0; i < img.data.size(); ++i)
        t.data[i] = static_cast<float>(img.data[i]) / 127.5f - 1.0f;
    return t;
}

Tensor normalize_depth_target(const Gray8& depth) {
    Tensor t({3, depth.height, depth.width});
    const std::size_t plane = depth.data.size();
    for (std::size_t i = 0; i < plane; ++i) {
        const float v = static_cast<float>(depth.data[i]) / 127.5f - 1.0f;
        t.data[i] = v;
        t.data[i + plane] = v;
        t.data[i + 2 * plane] = v;
    }
    return t;
}

std::uint8_t to_pixel(float v) {
    const float p = std::floor((v + 1.0f) * 127.5f + 0.5f);
    return static_cast<std::uint8_t>(std::clamp(p, 0.0f, 255.0f));
}

Gray8 prediction_to_gray(const Tensor& pred) {
    if (pred.ndim() != 3 || pred.shape[0] != 3)
        throw ShapeError("prediction must be 3xHxW, got " + pred.shape_str());
    Gray8 g(pred.shape[1], pred.shape[2]);
    const std::size_t plane = g.data.size();
    for (std::size_t i = 0; i < plane; ++i) {
        const float mean = (pred.data[i] + pred.data[i + plane] + pred.data[i + 2 * plane]) / 3.0f;
        g.data[i] = to_pixel(mean);
    }
    return g;
}

}  // namespace grudepth
