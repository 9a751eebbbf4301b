#pragma once

#include <cmath>
#include <stdexcept>

#include "flashgen/rng/philox.hpp"

namespace flashgen {

// Normal-Laplace distribution: X = Z + W with Z ~ Normal(mu, sigma^2) and W
// an asymmetric Laplace with right rate alpha and left rate beta_l.
// Density in Mills-ratio form (R(z) = (1 - Phi(z)) / phi(z)):
//   f(x) = (a*b/(a+b)) * phi(y) * [R(a*s - y) + R(b*s + y)],  y = (x - mu)/s
// evaluated in log space to survive extreme tail arguments.
struct NormalLaplaceParams {
  double mu = 0.0;      // location, voltage bins
  double sigma = 1.0;   // Gaussian scale
  double alpha = 1.0;   // right Laplace rate
  double beta_l = 1.0;  // left Laplace rate

  void validate() const {
    if (!(sigma > 0.0) || !(alpha > 0.0) || !(beta_l > 0.0))
      throw std::invalid_argument("normal-laplace scale and rates must be positive");
  }

  double mean() const { return mu + 1.0 / alpha - 1.0 / beta_l; }
  double variance() const { return sigma * sigma + 1.0 / (alpha * alpha) + 1.0 / (beta_l * beta_l); }
};

namespace numeric {

// Scaled complementary error function erfcx(x) = exp(x^2) erfc(x), x >= 0.
inline double erfcx_positive(double x) {
  if (x <= 25.0) return std::exp(x * x) * std::erfc(x);
  // Asymptotic series; relative error < 1e-10 for x > 25.
  const double ix2 = 1.0 / (x * x);
  const double series = 1.0 + ix2 * (-0.5 + ix2 * (0.75 - 1.875 * ix2));
  return series / (x * 1.7724538509055160273);  // sqrt(pi)
}

// log of the standard normal CDF, stable for arbitrarily negative t.
inline double log_norm_cdf(double t) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  if (t > -1.0) return std::log(0.5 * std::erfc(-t * inv_sqrt2));
  const double u = -t * inv_sqrt2;
  return std::log(0.5 * erfcx_positive(u)) - u * u;
}

}  // namespace numeric

inline double pdf_normal_laplace(double x, const NormalLaplaceParams& p) {
  const double y = (x - p.mu) / p.sigma;
  const double as = p.alpha * p.sigma;
  const double bs = p.beta_l * p.sigma;
  const double t_right = 0.5 * as * as - p.alpha * (x - p.mu) + numeric::log_norm_cdf(y - as);
  const double t_left = 0.5 * bs * bs + p.beta_l * (x - p.mu) + numeric::log_norm_cdf(-y - bs);
  const double hi = t_right > t_left ? t_right : t_left;
  const double lo = t_right > t_left ? t_left : t_right;
  const double coeff = p.alpha * p.beta_l / (p.alpha + p.beta_l);
  return coeff * std::exp(hi) * (1.0 + std::exp(lo - hi));
}

// One draw addressed by (stream, draw_index): Gaussian part plus the
// difference of two exponentials. Two counter blocks per draw.
inline double sample_normal_laplace(const NormalLaplaceParams& p, const rng::Philox& gen,
                                    std::uint64_t stream, std::uint64_t draw_index) {
  const double n = gen.normal2(stream, 2 * draw_index)[0];
  const auto [e1, e2] = gen.exponential2(stream, 2 * draw_index + 1);
  return p.mu + p.sigma * n + e1 / p.alpha - e2 / p.beta_l;
}

}  // namespace flashgen
