#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "grudepth/errors.hpp"
#include "grudepth/rng.hpp"

namespace grudepth {

// Dense N-dimensional array, row-major, last axis fastest. Image
// convention is channels x height x width. Templated on the scalar so
// the autodiff checker can run the same code in double precision;
// production paths use Tensor = TensorT<float>.
template <typename T>
struct TensorT {
    std::vector<int> shape;
    std::vector<T> data;

    TensorT() = default;

    explicit TensorT(std::vector<int> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), T(0));
    }

    TensorT(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != numel_of(shape)) {
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape product " + std::to_string(numel_of(shape)));
        }
    }

    static std::size_t numel_of(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int e : s) {
            if (e <= 0) throw ShapeError("non-positive extent " + std::to_string(e));
            n *= static_cast<std::size_t>(e);
        }
        return n;
    }

    static TensorT zeros(std::vector<int> s) { return TensorT(std::move(s)); }

    static TensorT full(std::vector<int> s, T v) {
        TensorT t(std::move(s));
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }

    static TensorT scalar(T v) { return TensorT({1}, {v}); }

    static TensorT uniform(std::vector<int> s, Rng& rng, T lo, T hi) {
        TensorT t(std::move(s));
        for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
        return t;
    }

    std::size_t numel() const { return data.size(); }
    bool empty() const { return data.empty(); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape.size()); }

    // Flat accessors for the common 3-axis (c,h,w) layout.
    T& at3(int c, int h, int w) {
        return data[(static_cast<std::size_t>(c) * shape[1] + h) * shape[2] + w];
    }
    T at3(int c, int h, int w) const {
        return data[(static_cast<std::size_t>(c) * shape[1] + h) * shape[2] + w];
    }

    bool same_shape(const TensorT& o) const { return shape == o.shape; }

    bool operator==(const TensorT& o) const { return shape == o.shape && data == o.data; }
    bool operator!=(const TensorT& o) const { return !(*this == o); }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }

    std::string shape_str() const {
        std::ostringstream os;
        os << '[';
        for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
        os << ']';
        return os.str();
    }
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

// 2-D convolution geometry. Output extent per axis is
// floor((in + 2*pad - k) / stride) + 1.
struct ConvSpec {
    int kh = 3;
    int kw = 3;
    int stride = 1;
    int pad = 0;
    int in_channels = 1;
    int out_channels = 1;

    int out_extent(int in, int k) const {
        int e = (in + 2 * pad - k) / stride + 1;
        if (e < 1) {
            throw ShapeError("conv output extent < 1 for input " + std::to_string(in) +
                             " kernel " + std::to_string(k) + " stride " + std::to_string(stride) +
                             " pad " + std::to_string(pad));
        }
        return e;
    }
    int out_h(int in_h) const { return out_extent(in_h, kh); }
    int out_w(int in_w) const { return out_extent(in_w, kw); }
};

}  // namespace grudepth
