#pragma once

#include <cblas.h>

#include <algorithm>
#include <cmath>

#include "grudepth/tensor.hpp"

namespace grudepth {

namespace detail {

inline void gemm(bool ta, bool tb, int m, int n, int k, float alpha, const float* a, int lda,
                 const float* b, int ldb, float beta, float* c, int ldc) {
    cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m,
                n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

inline void gemm(bool ta, bool tb, int m, int n, int k, double alpha, const double* a, int lda,
                 const double* b, int ldb, double beta, double* c, int ldc) {
    cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m,
                n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

// Unpack conv windows into a (C*kh*kw) x (H'*W') matrix.
template <typename T>
void im2col(const TensorT<T>& in, const ConvSpec& s, int oh, int ow, std::vector<T>& col) {
    const int C = in.shape[0], H = in.shape[1], W = in.shape[2];
    col.assign(static_cast<std::size_t>(C) * s.kh * s.kw * oh * ow, T(0));
    std::size_t r = 0;
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < s.kh; ++ky) {
            for (int kx = 0; kx < s.kw; ++kx, ++r) {
                T* dst = col.data() + r * oh * ow;
                for (int y = 0; y < oh; ++y) {
                    const int iy = y * s.stride + ky - s.pad;
                    if (iy < 0 || iy >= H) continue;
                    const T* src = in.data.data() + (static_cast<std::size_t>(c) * H + iy) * W;
                    for (int x = 0; x < ow; ++x) {
                        const int ix = x * s.stride + kx - s.pad;
                        if (ix >= 0 && ix < W) dst[y * ow + x] = src[ix];
                    }
                }
            }
        }
    }
}

// Scatter-add a column matrix back onto the input layout (transpose of im2col).
template <typename T>
void col2im(const std::vector<T>& col, const ConvSpec& s, int C, int H, int W, int oh, int ow,
            TensorT<T>& out) {
    out = TensorT<T>({C, H, W});
    std::size_t r = 0;
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < s.kh; ++ky) {
            for (int kx = 0; kx < s.kw; ++kx, ++r) {
                const T* src = col.data() + r * oh * ow;
                for (int y = 0; y < oh; ++y) {
                    const int iy = y * s.stride + ky - s.pad;
                    if (iy < 0 || iy >= H) continue;
                    T* dst = out.data.data() + (static_cast<std::size_t>(c) * H + iy) * W;
                    for (int x = 0; x < ow; ++x) {
                        const int ix = x * s.stride + kx - s.pad;
                        if (ix >= 0 && ix < W) dst[ix] += src[y * ow + x];
                    }
                }
            }
        }
    }
}

}  // namespace detail

template <typename T>
void check_conv_args(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                     const ConvSpec& s) {
    if (input.ndim() != 3)
        throw ShapeError("conv2d input must be CxHxW, got " + input.shape_str());
    if (weight.ndim() != 4)
        throw ShapeError("conv2d weight must be OxCxKHxKW, got " + weight.shape_str());
    if (input.shape[0] != weight.shape[1])
        throw ShapeError("conv2d channel axis mismatch: input has " +
                         std::to_string(input.shape[0]) + " channels, weight expects " +
                         std::to_string(weight.shape[1]));
    if (weight.shape[0] != s.out_channels || weight.shape[1] != s.in_channels ||
        weight.shape[2] != s.kh || weight.shape[3] != s.kw)
        throw ShapeError("conv2d weight " + weight.shape_str() + " inconsistent with spec");
    if (!bias.empty() && (bias.ndim() != 1 || bias.shape[0] != weight.shape[0]))
        throw ShapeError("conv2d bias axis mismatch: expected length " +
                         std::to_string(weight.shape[0]) + ", got " + bias.shape_str());
}

// Fast path: im2col + gemm. Agreement with the naive quadruple-loop
// reference is a tested invariant (1e-5 absolute).
template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                  const ConvSpec& s) {
    check_conv_args(input, weight, bias, s);
    const int oh = s.out_h(input.shape[1]);
    const int ow = s.out_w(input.shape[2]);
    const int O = s.out_channels;
    const int K = s.in_channels * s.kh * s.kw;

    std::vector<T> col;
    detail::im2col(input, s, oh, ow, col);

    TensorT<T> out({O, oh, ow});
    detail::gemm(false, false, O, oh * ow, K, T(1), weight.data.data(), K, col.data(), oh * ow,
                 T(0), out.data.data(), oh * ow);
    if (!bias.empty()) {
        for (int o = 0; o < O; ++o) {
            T* p = out.data.data() + static_cast<std::size_t>(o) * oh * ow;
            for (int i = 0; i < oh * ow; ++i) p[i] += bias.data[o];
        }
    }
    return out;
}

template <typename T>
struct ConvGrads {
    TensorT<T> dinput;
    TensorT<T> dweight;
    TensorT<T> dbias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const TensorT<T>& input, const TensorT<T>& weight, const ConvSpec& s,
                             const TensorT<T>& dout, bool has_bias) {
    const int oh = dout.shape[1], ow = dout.shape[2];
    const int O = s.out_channels;
    const int K = s.in_channels * s.kh * s.kw;

    std::vector<T> col;
    detail::im2col(input, s, oh, ow, col);

    ConvGrads<T> g;
    g.dweight = TensorT<T>({O, s.in_channels, s.kh, s.kw});
    // dW = dY (O x HW) * col^T (HW x K)
    detail::gemm(false, true, O, K, oh * ow, T(1), dout.data.data(), oh * ow, col.data(), oh * ow,
                 T(0), g.dweight.data.data(), K);

    if (has_bias) {
        g.dbias = TensorT<T>({O});
        for (int o = 0; o < O; ++o) {
            T acc = 0;
            const T* p = dout.data.data() + static_cast<std::size_t>(o) * oh * ow;
            for (int i = 0; i < oh * ow; ++i) acc += p[i];
            g.dbias.data[o] = acc;
        }
    }

    // dcol = W^T (K x O) * dY (O x HW), then scatter back.
    std::vector<T> dcol(static_cast<std::size_t>(K) * oh * ow);
    detail::gemm(true, false, K, oh * ow, O, T(1), weight.data.data(), K, dout.data.data(),
                 oh * ow, T(0), dcol.data(), oh * ow);
    detail::col2im(dcol, s, input.shape[0], input.shape[1], input.shape[2], oh, ow, g.dinput);
    return g;
}

// Lossless channel->space permutation: output (c, h*b+dy, w*b+dx) takes
// input (c*b^2 + dy*b + dx, h, w).
template <typename T>
TensorT<T> depth_to_space(const TensorT<T>& in, int block = 2) {
    if (in.ndim() != 3) throw ShapeError("depth_to_space input must be CxHxW");
    const int C = in.shape[0], H = in.shape[1], W = in.shape[2];
    const int b2 = block * block;
    if (block < 1 || C % b2 != 0)
        throw ConfigError("depth_to_space: channels " + std::to_string(C) +
                          " not divisible by block^2 = " + std::to_string(b2));
    TensorT<T> out({C / b2, H * block, W * block});
    for (int c = 0; c < C / b2; ++c)
        for (int dy = 0; dy < block; ++dy)
            for (int dx = 0; dx < block; ++dx) {
                const int ic = c * b2 + dy * block + dx;
                for (int h = 0; h < H; ++h)
                    for (int w = 0; w < W; ++w)
                        out.at3(c, h * block + dy, w * block + dx) = in.at3(ic, h, w);
            }
    return out;
}

template <typename T>
TensorT<T> space_to_depth(const TensorT<T>& in, int block = 2) {
    if (in.ndim() != 3) throw ShapeError("space_to_depth input must be CxHxW");
    const int C = in.shape[0], H = in.shape[1], W = in.shape[2];
    if (block < 1 || H % block != 0 || W % block != 0)
        throw ConfigError("space_to_depth: spatial extents " + std::to_string(H) + "x" +
                          std::to_string(W) + " not divisible by block " + std::to_string(block));
    const int b2 = block * block;
    TensorT<T> out({C * b2, H / block, W / block});
    for (int c = 0; c < C; ++c)
        for (int dy = 0; dy < block; ++dy)
            for (int dx = 0; dx < block; ++dx) {
                const int oc = c * b2 + dy * block + dx;
                for (int h = 0; h < H / block; ++h)
                    for (int w = 0; w < W / block; ++w)
                        out.at3(oc, h, w) = in.at3(c, h * block + dy, w * block + dx);
            }
    return out;
}

enum class LReluVariant {
    Standard,       // f(x) = x for x>=0, alpha*x otherwise
    PaperVerbatim,  // f(x) = alpha*max(0,x) + (1-alpha)*max(0,-x)
};

template <typename T>
TensorT<T> lrelu(const TensorT<T>& x, T alpha, LReluVariant variant = LReluVariant::Standard) {
    if (!(alpha >= T(0) && alpha <= T(1)))
        throw ConfigError("lrelu alpha must lie in [0,1]");
    TensorT<T> out = x;
    if (variant == LReluVariant::Standard) {
        for (auto& v : out.data) v = v >= T(0) ? v : alpha * v;
    } else {
        for (auto& v : out.data)
            v = alpha * std::max(T(0), v) + (T(1) - alpha) * std::max(T(0), -v);
    }
    return out;
}

// Derivative w.r.t. x; at exactly 0 the positive-branch slope is used.
template <typename T>
T lrelu_slope(T x, T alpha, LReluVariant variant) {
    if (variant == LReluVariant::Standard) return x >= T(0) ? T(1) : alpha;
    return x >= T(0) ? alpha : -(T(1) - alpha);
}

template <typename T>
TensorT<T> sigmoid(const TensorT<T>& x) {
    TensorT<T> out = x;
    for (auto& v : out.data) v = T(1) / (T(1) + std::exp(-v));
    return out;
}

template <typename T>
TensorT<T> tanh_t(const TensorT<T>& x) {
    TensorT<T> out = x;
    for (auto& v : out.data) v = std::tanh(v);
    return out;
}

template <typename T>
void check_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
}

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
    check_same_shape(a, b, "add");
    TensorT<T> out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
    check_same_shape(a, b, "sub");
    TensorT<T> out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
    check_same_shape(a, b, "mul");
    TensorT<T> out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

// a*x + b elementwise with scalar coefficients.
template <typename T>
TensorT<T> affine(const TensorT<T>& x, T a, T b) {
    TensorT<T> out = x;
    for (auto& v : out.data) v = a * v + b;
    return out;
}

template <typename T>
TensorT<T> scale(const TensorT<T>& x, T a) {
    return affine(x, a, T(0));
}

// Sum of absolute elementwise differences (the per-image loss).
template <typename T>
T l1_diff(const TensorT<T>& y, const TensorT<T>& yhat) {
    check_same_shape(y, yhat, "l1");
    T acc = 0;
    for (std::size_t i = 0; i < y.data.size(); ++i) acc += std::abs(y.data[i] - yhat.data[i]);
    return acc;
}

template <typename T>
T sum_all(const TensorT<T>& x) {
    T acc = 0;
    for (T v : x.data) acc += v;
    return acc;
}

}  // namespace grudepth
