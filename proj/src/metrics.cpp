#include "grudepth/metrics.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "grudepth/errors.hpp"

namespace grudepth {

std::string MetricsReport::to_json() const {
    nlohmann::json j{{"mse", mse},
                     {"ae", ae},
                     {"rmsle", rmsle},
                     {"n_pixels", n_pixels},
                     {"n_channels", n_channels},
                     {"n_images", n_images}};
    return j.dump(2);
}

std::string MetricsReport::to_csv() const {
    std::ostringstream os;
    os << "metric,value\n";
    os.precision(12);
    os << "mse," << mse << "\nae," << ae << "\nrmsle," << rmsle << "\nn_pixels," << n_pixels
       << "\nn_channels," << n_channels << "\nn_images," << n_images << "\n";
    return os.str();
}

void MetricsAccumulator::add_value(double real, double pred) {
    if (real < 0 || real > 255 || pred < 0 || pred > 255)
        throw NumericError("metric input outside [0,255]");
    const double d = real - pred;
    sq_sum_ += d * d;
    abs_sum_ += std::abs(d);
    const double ld = std::log(256.0 - real) - std::log(256.0 - pred);
    log_sq_sum_ += ld * ld;
    ++values_;
}

void MetricsAccumulator::add(const Image8& real, const Image8& pred) {
    if (real.width != pred.width || real.height != pred.height)
        throw ShapeError("metric image dimension mismatch");
    for (std::size_t i = 0; i < real.data.size(); ++i)
        add_value(real.data[i], pred.data[i]);
    pixels_ += static_cast<std::size_t>(real.width) * real.height;
    channels_ = 3;
    ++images_;
}

void MetricsAccumulator::add(const Gray8& real, const Gray8& pred) {
    if (real.width != pred.width || real.height != pred.height)
        throw ShapeError("metric image dimension mismatch");
    for (std::size_t i = 0; i < real.data.size(); ++i)
        add_value(real.data[i], pred.data[i]);
    pixels_ += static_cast<std::size_t>(real.width) * real.height;
    channels_ = 1;
    ++images_;
}

MetricsReport MetricsAccumulator::report() const {
    if (values_ == 0) throw ConfigError("metrics over an empty image set");
    MetricsReport r;
    const double n = static_cast<double>(values_);
    r.mse = sq_sum_ / n;
    r.ae = abs_sum_ / n;
    r.rmsle = std::sqrt(log_sq_sum_ / n);
    r.n_pixels = pixels_;
    r.n_channels = channels_;
    r.n_images = images_;
    return r;
}

namespace {

MetricsReport run_set(const std::vector<Image8>& real, const std::vector<Image8>& pred) {
    if (real.size() != pred.size()) throw ShapeError("metric image list length mismatch");
    MetricsAccumulator acc;
    for (std::size_t i = 0; i < real.size(); ++i) acc.add(real[i], pred[i]);
    return acc.report();
}

}  // namespace

double mse(const std::vector<Image8>& real, const std::vector<Image8>& pred) {
    return run_set(real, pred).mse;
}
double ae(const std::vector<Image8>& real, const std::vector<Image8>& pred) {
    return run_set(real, pred).ae;
}
double rmsle(const std::vector<Image8>& real, const std::vector<Image8>& pred) {
    return run_set(real, pred).rmsle;
}
MetricsReport evaluate(const std::vector<Image8>& real, const std::vector<Image8>& pred) {
    return run_set(real, pred);
}

MetricsReport evaluate_gray(const std::vector<Gray8>& real, const std::vector<Gray8>& pred) {
    if (real.size() != pred.size()) throw ShapeError("metric image list length mismatch");
    MetricsAccumulator acc;
    for (std::size_t i = 0; i < real.size(); ++i) acc.add(real[i], pred[i]);
    return acc.report();
}

Image8 gray_to_rgb(const Gray8& g) {
    Image8 img(g.height, g.width);
    const std::size_t plane = g.data.size();
    for (std::size_t i = 0; i < plane; ++i) {
        img.data[i] = g.data[i];
        img.data[i + plane] = g.data[i];
        img.data[i + 2 * plane] = g.data[i];
    }
    return img;
}

}  // namespace grudepth
