#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "flashgen/nn/tensor.hpp"

namespace flashgen::nn {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapRM = Eigen::Map<const MatRM<T>>;

namespace detail {

// Unfolds one sample's (C, H, W) block into a (C*k*k) x (OH*OW) column
// matrix for stride/pad convolution. Out-of-bounds taps read as zero.
template <typename T>
void im2col(const T* src, int C, int H, int W, int k, int stride, int pad, int OH, int OW,
            T* col) {
  for (int c = 0; c < C; ++c) {
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        T* row = col + (static_cast<std::size_t>(c) * k * k + kh * k + kw) *
                           (static_cast<std::size_t>(OH) * OW);
        for (int oh = 0; oh < OH; ++oh) {
          const int ih = oh * stride - pad + kh;
          for (int ow = 0; ow < OW; ++ow) {
            const int iw = ow * stride - pad + kw;
            row[oh * OW + ow] = (ih >= 0 && ih < H && iw >= 0 && iw < W)
                                    ? src[(static_cast<std::size_t>(c) * H + ih) * W + iw]
                                    : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds a column matrix back onto the (C, H, W)
// block. dst must be pre-zeroed by the caller when accumulation starts.
template <typename T>
void col2im_add(const T* col, int C, int H, int W, int k, int stride, int pad, int OH, int OW,
                T* dst) {
  for (int c = 0; c < C; ++c) {
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        const T* row = col + (static_cast<std::size_t>(c) * k * k + kh * k + kw) *
                                 (static_cast<std::size_t>(OH) * OW);
        for (int oh = 0; oh < OH; ++oh) {
          const int ih = oh * stride - pad + kh;
          if (ih < 0 || ih >= H) continue;
          for (int ow = 0; ow < OW; ++ow) {
            const int iw = ow * stride - pad + kw;
            if (iw < 0 || iw >= W) continue;
            dst[(static_cast<std::size_t>(c) * H + ih) * W + iw] += row[oh * OW + ow];
          }
        }
      }
    }
  }
}

}  // namespace detail

// 2-D convolution, square kernel. Weight layout (out_c, in_c, k, k); the
// flat view is the (out_c) x (in_c*k*k) GEMM operand.
template <typename T>
struct Conv2d {
  int in_c = 0, out_c = 0, k = 0, stride = 1, pad = 0;
  Param<T> weight, bias;
  Tensor<T> col_cache;  // (N, 1, in_c*k*k, OH*OW)
  int in_h = 0, in_w = 0;

  Conv2d() = default;
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride_, int pad_)
      : in_c(in_channels),
        out_c(out_channels),
        k(kernel),
        stride(stride_),
        pad(pad_),
        weight(name + ".w", out_channels, in_channels, kernel, kernel),
        bias(name + ".b", 1, out_channels, 1, 1) {}

  void init(rng::SequentialStream& s, double stddev = 0.02) {
    fill_normal(weight.w, s, stddev);
    fill_constant(bias.w, 0.0);
  }

  int out_size(int in) const { return (in + 2 * pad - k) / stride + 1; }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.c != in_c) throw std::invalid_argument("conv2d: channel mismatch " + x.shape_str());
    in_h = x.h;
    in_w = x.w;
    const int OH = out_size(x.h), OW = out_size(x.w);
    const int ckk = in_c * k * k;
    col_cache = Tensor<T>(x.n, 1, ckk, OH * OW);
    Tensor<T> y(x.n, out_c, OH, OW);
    CMapRM<T> wm(weight.w.v.data(), out_c, ckk);
    for (int n = 0; n < x.n; ++n) {
      T* col = &col_cache.at(n, 0, 0, 0);
      detail::im2col(&x.at(n, 0, 0, 0), in_c, x.h, x.w, k, stride, pad, OH, OW, col);
      MapRM<T> ym(&y.at(n, 0, 0, 0), out_c, OH * OW);
      ym.noalias() = wm * CMapRM<T>(col, ckk, OH * OW);
      for (int c = 0; c < out_c; ++c) ym.row(c).array() += bias.w.v[c];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const int OH = dy.h, OW = dy.w;
    const int ckk = in_c * k * k;
    Tensor<T> dx(dy.n, in_c, in_h, in_w);
    dx.zero();
    MapRM<T> dwm(weight.g.v.data(), out_c, ckk);
    CMapRM<T> wm(weight.w.v.data(), out_c, ckk);
    MatRM<T> dcol(ckk, OH * OW);
    for (int n = 0; n < dy.n; ++n) {
      CMapRM<T> dym(&dy.at(n, 0, 0, 0), out_c, OH * OW);
      CMapRM<T> col(&col_cache.at(n, 0, 0, 0), ckk, OH * OW);
      dwm.noalias() += dym * col.transpose();
      // Scalar reduction: keeps the summation order independent of buffer
      // alignment so reruns are bit-identical.
      for (int c = 0; c < out_c; ++c) {
        acc_t<T> s = 0;
        const T* row = &dy.at(n, c, 0, 0);
        for (int i = 0; i < OH * OW; ++i) s += row[i];
        bias.g.v[c] += static_cast<T>(s);
      }
      dcol.noalias() = wm.transpose() * dym;
      detail::col2im_add(dcol.data(), in_c, in_h, in_w, k, stride, pad, OH, OW,
                         &dx.at(n, 0, 0, 0));
    }
    return dx;
  }

  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }
};

// Transposed convolution (fractionally strided). Weight layout
// (in_c, out_c, k, k); flat view (in_c) x (out_c*k*k). Output spatial size
// is (in - 1)*stride - 2*pad + k.
template <typename T>
struct ConvTranspose2d {
  int in_c = 0, out_c = 0, k = 0, stride = 1, pad = 0;
  Param<T> weight, bias;
  Tensor<T> x_cache;

  ConvTranspose2d() = default;
  ConvTranspose2d(std::string name, int in_channels, int out_channels, int kernel, int stride_,
                  int pad_)
      : in_c(in_channels),
        out_c(out_channels),
        k(kernel),
        stride(stride_),
        pad(pad_),
        weight(name + ".w", in_channels, out_channels, kernel, kernel),
        bias(name + ".b", 1, out_channels, 1, 1) {}

  void init(rng::SequentialStream& s, double stddev = 0.02) {
    fill_normal(weight.w, s, stddev);
    fill_constant(bias.w, 0.0);
  }

  int out_size(int in) const { return (in - 1) * stride - 2 * pad + k; }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.c != in_c) throw std::invalid_argument("convT2d: channel mismatch " + x.shape_str());
    x_cache = x;
    const int OH = out_size(x.h), OW = out_size(x.w);
    const int ckk = out_c * k * k;
    Tensor<T> y(x.n, out_c, OH, OW);
    y.zero();
    CMapRM<T> wm(weight.w.v.data(), in_c, ckk);
    MatRM<T> cols(ckk, x.h * x.w);
    for (int n = 0; n < x.n; ++n) {
      CMapRM<T> xm(&x.at(n, 0, 0, 0), in_c, x.h * x.w);
      cols.noalias() = wm.transpose() * xm;
      // Forward here is the adjoint of a stride-2 conv on the output grid.
      detail::col2im_add(cols.data(), out_c, OH, OW, k, stride, pad, x.h, x.w,
                         &y.at(n, 0, 0, 0));
      MapRM<T> ym(&y.at(n, 0, 0, 0), out_c, OH * OW);
      for (int c = 0; c < out_c; ++c) ym.row(c).array() += bias.w.v[c];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const Tensor<T>& x = x_cache;
    const int OH = dy.h, OW = dy.w;
    const int ckk = out_c * k * k;
    Tensor<T> dx(x.n, in_c, x.h, x.w);
    MapRM<T> dwm(weight.g.v.data(), in_c, ckk);
    CMapRM<T> wm(weight.w.v.data(), in_c, ckk);
    MatRM<T> col(ckk, x.h * x.w);
    for (int n = 0; n < x.n; ++n) {
      detail::im2col(&dy.at(n, 0, 0, 0), out_c, OH, OW, k, stride, pad, x.h, x.w, col.data());
      CMapRM<T> xm(&x.at(n, 0, 0, 0), in_c, x.h * x.w);
      dwm.noalias() += xm * col.transpose();
      MapRM<T> dxm(&dx.at(n, 0, 0, 0), in_c, x.h * x.w);
      dxm.noalias() = wm * col;
      for (int c = 0; c < out_c; ++c) {
        acc_t<T> s = 0;
        const T* row = &dy.at(n, c, 0, 0);
        for (int i = 0; i < OH * OW; ++i) s += row[i];
        bias.g.v[c] += static_cast<T>(s);
      }
    }
    return dx;
  }

  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }
};

// Spatial batch normalization. Training mode uses per-batch statistics
// pooled over (N, H, W) and keeps exponential running averages; inference
// (and any batch with N < 2) normalizes by the running averages.
template <typename T>
struct BatchNorm2d {
  int channels = 0;
  double momentum = 0.1;
  double eps = 1e-5;
  Param<T> gamma, beta;
  Tensor<T> running_mean, running_var;

  Tensor<T> xhat_cache;
  std::vector<acc_t<T>> inv_std_cache;
  bool used_batch_stats = false;

  BatchNorm2d() = default;
  BatchNorm2d(std::string name, int channels_)
      : channels(channels_),
        gamma(name + ".gamma", 1, channels_, 1, 1),
        beta(name + ".beta", 1, channels_, 1, 1),
        running_mean(1, channels_, 1, 1),
        running_var(1, channels_, 1, 1) {
    fill_constant(gamma.w, 1.0);
    fill_constant(beta.w, 0.0);
    fill_constant(running_mean, 0.0);
    fill_constant(running_var, 1.0);
  }

  void init(rng::SequentialStream& s, double stddev = 0.02) {
    fill_normal(gamma.w, s, stddev, 1.0);
    fill_constant(beta.w, 0.0);
  }

  Tensor<T> forward(const Tensor<T>& x, bool training) {
    if (x.c != channels) throw std::invalid_argument("batchnorm: channel mismatch");
    used_batch_stats = training && x.n >= 2;
    const int m = x.n * x.h * x.w;
    Tensor<T> y(x.n, x.c, x.h, x.w);
    xhat_cache = Tensor<T>(x.n, x.c, x.h, x.w);
    inv_std_cache.assign(static_cast<std::size_t>(channels), acc_t<T>(0));
    using A = acc_t<T>;
    for (int c = 0; c < channels; ++c) {
      A mean, var;
      if (used_batch_stats) {
        A s1 = 0;
        for (int n = 0; n < x.n; ++n)
          for (int h = 0; h < x.h; ++h)
            for (int w = 0; w < x.w; ++w) s1 += x.at(n, c, h, w);
        mean = s1 / m;
        A s2 = 0;
        for (int n = 0; n < x.n; ++n)
          for (int h = 0; h < x.h; ++h)
            for (int w = 0; w < x.w; ++w) {
              const A d = x.at(n, c, h, w) - mean;
              s2 += d * d;
            }
        var = s2 / m;
        running_mean.v[c] = static_cast<T>((1.0 - momentum) * running_mean.v[c] + momentum * mean);
        running_var.v[c] = static_cast<T>((1.0 - momentum) * running_var.v[c] + momentum * var);
      } else {
        mean = running_mean.v[c];
        var = running_var.v[c];
      }
      const A inv_std = A(1) / std::sqrt(var + static_cast<A>(eps));
      inv_std_cache[c] = inv_std;
      const A g = gamma.w.v[c], b = beta.w.v[c];
      for (int n = 0; n < x.n; ++n)
        for (int h = 0; h < x.h; ++h)
          for (int w = 0; w < x.w; ++w) {
            const A xh = (x.at(n, c, h, w) - mean) * inv_std;
            xhat_cache.at(n, c, h, w) = static_cast<T>(xh);
            y.at(n, c, h, w) = static_cast<T>(g * xh + b);
          }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const int m = dy.n * dy.h * dy.w;
    Tensor<T> dx(dy.n, dy.c, dy.h, dy.w);
    using A = acc_t<T>;
    for (int c = 0; c < channels; ++c) {
      A sum_dy = 0, sum_dy_xhat = 0;
      for (int n = 0; n < dy.n; ++n)
        for (int h = 0; h < dy.h; ++h)
          for (int w = 0; w < dy.w; ++w) {
            const A d = dy.at(n, c, h, w);
            sum_dy += d;
            sum_dy_xhat += d * xhat_cache.at(n, c, h, w);
          }
      beta.g.v[c] += static_cast<T>(sum_dy);
      gamma.g.v[c] += static_cast<T>(sum_dy_xhat);
      const A g = gamma.w.v[c];
      const A inv_std = inv_std_cache[c];
      for (int n = 0; n < dy.n; ++n)
        for (int h = 0; h < dy.h; ++h)
          for (int w = 0; w < dy.w; ++w) {
            const A d = dy.at(n, c, h, w);
            if (used_batch_stats) {
              const A xh = xhat_cache.at(n, c, h, w);
              dx.at(n, c, h, w) =
                  static_cast<T>(g * inv_std * (d - sum_dy / m - xh * sum_dy_xhat / m));
            } else {
              dx.at(n, c, h, w) = static_cast<T>(g * inv_std * d);
            }
          }
    }
    return dx;
  }

  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
  }
};

// Fully connected layer on (N, C, 1, 1) feature vectors.
template <typename T>
struct Linear {
  int in_f = 0, out_f = 0;
  Param<T> weight, bias;  // weight (1, 1, out_f, in_f)
  Tensor<T> x_cache;

  Linear() = default;
  Linear(std::string name, int in_features, int out_features)
      : in_f(in_features),
        out_f(out_features),
        weight(name + ".w", 1, 1, out_features, in_features),
        bias(name + ".b", 1, out_features, 1, 1) {}

  void init(rng::SequentialStream& s, double stddev = 0.02) {
    fill_normal(weight.w, s, stddev);
    fill_constant(bias.w, 0.0);
  }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.c != in_f || x.h != 1 || x.w != 1)
      throw std::invalid_argument("linear: expected (N," + std::to_string(in_f) + ",1,1), got " +
                                  x.shape_str());
    x_cache = x;
    Tensor<T> y(x.n, out_f, 1, 1);
    CMapRM<T> xm(x.v.data(), x.n, in_f);
    CMapRM<T> wm(weight.w.v.data(), out_f, in_f);
    MapRM<T> ym(y.v.data(), y.n, out_f);
    ym.noalias() = xm * wm.transpose();
    for (int n = 0; n < y.n; ++n)
      for (int c = 0; c < out_f; ++c) ym(n, c) += bias.w.v[c];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(x_cache.n, in_f, 1, 1);
    CMapRM<T> dym(dy.v.data(), dy.n, out_f);
    CMapRM<T> xm(x_cache.v.data(), x_cache.n, in_f);
    CMapRM<T> wm(weight.w.v.data(), out_f, in_f);
    MapRM<T> dwm(weight.g.v.data(), out_f, in_f);
    MapRM<T> dxm(dx.v.data(), dx.n, in_f);
    dwm.noalias() += dym.transpose() * xm;
    for (int n = 0; n < dy.n; ++n)
      for (int c = 0; c < out_f; ++c) bias.g.v[c] += dym(n, c);
    dxm.noalias() = dym * wm;
    return dx;
  }

  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }
};

// --- activations ---

template <typename T>
struct ReLU {
  Tensor<T> y_cache;
  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> y = x;
    for (auto& v : y.v) v = v > T(0) ? v : T(0);
    y_cache = y;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.v.size(); ++i)
      if (!(y_cache.v[i] > T(0))) dx.v[i] = T(0);
    return dx;
  }
};

template <typename T>
struct LeakyReLU {
  T slope = T(0.2);
  Tensor<T> x_cache;
  explicit LeakyReLU(double s = 0.2) : slope(static_cast<T>(s)) {}
  Tensor<T> forward(const Tensor<T>& x) {
    x_cache = x;
    Tensor<T> y = x;
    for (auto& v : y.v) v = v > T(0) ? v : slope * v;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.v.size(); ++i)
      if (!(x_cache.v[i] > T(0))) dx.v[i] *= slope;
    return dx;
  }
};

template <typename T>
struct Tanh {
  Tensor<T> y_cache;
  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> y = x;
    for (auto& v : y.v) v = std::tanh(v);
    y_cache = y;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.v.size(); ++i) {
      const T t = y_cache.v[i];
      dx.v[i] *= T(1) - t * t;
    }
    return dx;
  }
};

template <typename T>
struct Softplus {
  Tensor<T> x_cache;
  Tensor<T> forward(const Tensor<T>& x) {
    x_cache = x;
    Tensor<T> y = x;
    for (auto& v : y.v) {
      const T a = v > T(0) ? v : T(0);
      v = a + std::log1p(std::exp(-std::abs(v)));
    }
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.v.size(); ++i)
      dx.v[i] *= T(1) / (T(1) + std::exp(-x_cache.v[i]));
    return dx;
  }
};

// Global average pool (N,C,H,W) -> (N,C,1,1).
template <typename T>
struct GlobalAvgPool {
  int h_cache = 0, w_cache = 0;
  Tensor<T> forward(const Tensor<T>& x) {
    h_cache = x.h;
    w_cache = x.w;
    Tensor<T> y(x.n, x.c, 1, 1);
    const acc_t<T> inv = acc_t<T>(1) / (static_cast<acc_t<T>>(x.h) * x.w);
    for (int n = 0; n < x.n; ++n)
      for (int c = 0; c < x.c; ++c) {
        acc_t<T> s = 0;
        for (int h = 0; h < x.h; ++h)
          for (int w = 0; w < x.w; ++w) s += x.at(n, c, h, w);
        y.at(n, c, 0, 0) = static_cast<T>(s * inv);
      }
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.n, dy.c, h_cache, w_cache);
    const acc_t<T> inv = acc_t<T>(1) / (static_cast<acc_t<T>>(h_cache) * w_cache);
    for (int n = 0; n < dy.n; ++n)
      for (int c = 0; c < dy.c; ++c) {
        const T g = static_cast<T>(dy.at(n, c, 0, 0) * inv);
        for (int h = 0; h < h_cache; ++h)
          for (int w = 0; w < w_cache; ++w) dx.at(n, c, h, w) = g;
      }
    return dx;
  }
};

// --- structural ops (stateless; backward handled by the caller) ---

// st_concat: appends d constant channels, each spatially replicating one
// entry of the per-sample vector (N, d, 1, 1). Output (N, C+d, H, W).
template <typename T>
Tensor<T> append_vector_channels(const Tensor<T>& x, const Tensor<T>& vec) {
  if (vec.n != x.n || vec.h != 1 || vec.w != 1)
    throw std::invalid_argument("append_vector_channels: vector shape mismatch");
  Tensor<T> y(x.n, x.c + vec.c, x.h, x.w);
  for (int n = 0; n < x.n; ++n) {
    for (int c = 0; c < x.c; ++c)
      for (int h = 0; h < x.h; ++h)
        for (int w = 0; w < x.w; ++w) y.at(n, c, h, w) = x.at(n, c, h, w);
    for (int c = 0; c < vec.c; ++c) {
      const T v = vec.at(n, c, 0, 0);
      for (int h = 0; h < x.h; ++h)
        for (int w = 0; w < x.w; ++w) y.at(n, x.c + c, h, w) = v;
    }
  }
  return y;
}

// Splits the gradient of append_vector_channels: returns the gradient of x
// and accumulates the spatial sum of the appended channels into dvec.
template <typename T>
Tensor<T> split_vector_channels_grad(const Tensor<T>& dy, int x_channels, Tensor<T>& dvec) {
  const int d = dy.c - x_channels;
  if (d != dvec.c || dvec.n != dy.n)
    throw std::invalid_argument("split_vector_channels_grad: shape mismatch");
  Tensor<T> dx(dy.n, x_channels, dy.h, dy.w);
  for (int n = 0; n < dy.n; ++n) {
    for (int c = 0; c < x_channels; ++c)
      for (int h = 0; h < dy.h; ++h)
        for (int w = 0; w < dy.w; ++w) dx.at(n, c, h, w) = dy.at(n, c, h, w);
    for (int c = 0; c < d; ++c) {
      acc_t<T> s = 0;
      for (int h = 0; h < dy.h; ++h)
        for (int w = 0; w < dy.w; ++w) s += dy.at(n, x_channels + c, h, w);
      dvec.at(n, c, 0, 0) += static_cast<T>(s);
    }
  }
  return dx;
}

// Channel concatenation of two maps with equal spatial dims.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w)
    throw std::invalid_argument("concat_channels: shape mismatch");
  Tensor<T> y(a.n, a.c + b.c, a.h, a.w);
  for (int n = 0; n < a.n; ++n) {
    for (int c = 0; c < a.c; ++c)
      for (int h = 0; h < a.h; ++h)
        for (int w = 0; w < a.w; ++w) y.at(n, c, h, w) = a.at(n, c, h, w);
    for (int c = 0; c < b.c; ++c)
      for (int h = 0; h < a.h; ++h)
        for (int w = 0; w < a.w; ++w) y.at(n, a.c + c, h, w) = b.at(n, c, h, w);
  }
  return y;
}

// Splits a gradient back into the two concat operands.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels_grad(const Tensor<T>& dy, int a_channels) {
  Tensor<T> da(dy.n, a_channels, dy.h, dy.w);
  Tensor<T> db(dy.n, dy.c - a_channels, dy.h, dy.w);
  for (int n = 0; n < dy.n; ++n) {
    for (int c = 0; c < a_channels; ++c)
      for (int h = 0; h < dy.h; ++h)
        for (int w = 0; w < dy.w; ++w) da.at(n, c, h, w) = dy.at(n, c, h, w);
    for (int c = 0; c < dy.c - a_channels; ++c)
      for (int h = 0; h < dy.h; ++h)
        for (int w = 0; w < dy.w; ++w) db.at(n, c, h, w) = dy.at(n, a_channels + c, h, w);
  }
  return {std::move(da), std::move(db)};
}

}  // namespace flashgen::nn
