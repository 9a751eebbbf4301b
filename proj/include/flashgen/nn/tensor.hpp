#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "flashgen/rng/philox.hpp"

namespace flashgen::nn {

// Accumulator scalar for reductions: at least double, widened to long double
// when the tensor type itself is long double (used by extended-precision
// gradient verification).
template <typename T>
using acc_t = std::conditional_t<std::is_same_v<T, long double>, long double, double>;

// Dense NCHW tensor. Vectors are stored as (1, C, 1, 1), linear weights as
// (1, 1, rows, cols). Templated so training runs in float and gradient
// checks in double or extended precision.
template <typename T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_), v(static_cast<std::size_t>(n_) * c_ * h_ * w_) {
    if (n_ < 1 || c_ < 1 || h_ < 1 || w_ < 1)
      throw std::invalid_argument("tensor dimensions must be positive");
  }

  std::size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
  std::string shape_str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
  }

  T& at(int in, int ic, int ih, int iw) {
    return v[((static_cast<std::size_t>(in) * c + ic) * h + ih) * w + iw];
  }
  const T& at(int in, int ic, int ih, int iw) const {
    return v[((static_cast<std::size_t>(in) * c + ic) * h + ih) * w + iw];
  }

  void zero() { std::fill(v.begin(), v.end(), T(0)); }

  Tensor& operator+=(const Tensor& o) {
    if (!same_shape(o)) throw std::invalid_argument("tensor shape mismatch in +=");
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
    return *this;
  }
};

// Fills from a sequential normal stream; the draw order is the flat storage
// order, so initialization is reproducible across runs and platforms.
template <typename T>
void fill_normal(Tensor<T>& t, rng::SequentialStream& stream, double stddev, double mean = 0.0) {
  for (auto& x : t.v) x = static_cast<T>(mean + stddev * stream.normal());
}

template <typename T>
void fill_constant(Tensor<T>& t, double value) {
  std::fill(t.v.begin(), t.v.end(), static_cast<T>(value));
}

// A named, learnable tensor with its gradient accumulator.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> w;
  Tensor<T> g;

  Param() = default;
  Param(std::string name_, int n, int c, int h, int wd)
      : name(std::move(name_)), w(n, c, h, wd), g(n, c, h, wd) {}
};

}  // namespace flashgen::nn
