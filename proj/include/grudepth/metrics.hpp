#pragma once

#include <string>
#include <vector>

#include "grudepth/image.hpp"

namespace grudepth {

// Test-set error metrics over 8-bit depth images, averaged over every
// channel of every pixel of the whole set. RMSLE uses log(256 - d),
// natural logarithm, square root last.
struct MetricsReport {
    double mse = 0;
    double ae = 0;
    double rmsle = 0;
    std::size_t n_pixels = 0;
    std::size_t n_channels = 0;
    std::size_t n_images = 0;

    std::string to_json() const;
    std::string to_csv() const;
};

// Single-pass accumulator; add matched pairs, then report().
class MetricsAccumulator {
public:
    void add(const Image8& real, const Image8& pred);
    void add(const Gray8& real, const Gray8& pred);  // c = 1
    MetricsReport report() const;

private:
    void add_value(double real, double pred);

    double sq_sum_ = 0;
    double abs_sum_ = 0;
    double log_sq_sum_ = 0;
    std::size_t values_ = 0;
    std::size_t pixels_ = 0;
    std::size_t channels_ = 0;
    std::size_t images_ = 0;
};

double mse(const std::vector<Image8>& real, const std::vector<Image8>& pred);
double ae(const std::vector<Image8>& real, const std::vector<Image8>& pred);
double rmsle(const std::vector<Image8>& real, const std::vector<Image8>& pred);
MetricsReport evaluate(const std::vector<Image8>& real, const std::vector<Image8>& pred);
MetricsReport evaluate_gray(const std::vector<Gray8>& real, const std::vector<Gray8>& pred);

Image8 gray_to_rgb(const Gray8& g);

}  // namespace grudepth
