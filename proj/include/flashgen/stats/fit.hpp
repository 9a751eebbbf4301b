#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "flashgen/core/histogram.hpp"
#include "flashgen/stats/densities.hpp"
#include "flashgen/stats/kl.hpp"
#include "flashgen/stats/nelder_mead.hpp"

namespace flashgen {

enum class FitFamily { gaussian, normal_laplace, student_t };

inline const char* to_string(FitFamily f) {
  switch (f) {
    case FitFamily::gaussian: return "gaussian";
    case FitFamily::normal_laplace: return "normal-laplace";
    case FitFamily::student_t: return "student-t";
  }
  throw std::invalid_argument("unknown fit family");
}

inline FitFamily fit_family_from_string(const std::string& s) {
  if (s == "gaussian") return FitFamily::gaussian;
  if (s == "normal-laplace") return FitFamily::normal_laplace;
  if (s == "student-t") return FitFamily::student_t;
  throw std::invalid_argument("unknown fit family: " + s);
}

struct fit_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Outcome of one KL-minimizing fit. `params` is family-specific:
//   gaussian        mu, sigma
//   normal-laplace  mu, sigma, alpha, beta
//   student-t       mu, scale, nu
struct FitResult {
  FitFamily family = FitFamily::gaussian;
  std::vector<double> params;
  double kl = 0.0;
  int iterations = 0;
  bool max_iter_reached = false;
  bool eps_floored = false;
};

namespace detail {

// Natural <-> unconstrained coordinates: location stays linear, every
// positive parameter is optimized as its logarithm.
inline std::vector<double> fit_params_from_theta(FitFamily family, const std::vector<double>& t) {
  switch (family) {
    case FitFamily::gaussian: return {t[0], std::exp(t[1])};
    case FitFamily::normal_laplace: return {t[0], std::exp(t[1]), std::exp(t[2]), std::exp(t[3])};
    case FitFamily::student_t: return {t[0], std::exp(t[1]), std::exp(t[2])};
  }
  throw std::invalid_argument("unknown fit family");
}

inline double fit_pdf(FitFamily family, const std::vector<double>& p, double x) {
  switch (family) {
    case FitFamily::gaussian: return pdf_gaussian(x, {p[0], p[1]});
    case FitFamily::normal_laplace: return pdf_normal_laplace(x, {p[0], p[1], p[2], p[3]});
    case FitFamily::student_t: return pdf_student_t(x, {p[0], p[1], p[2]});
  }
  throw std::invalid_argument("unknown fit family");
}

}  // namespace detail

// Fits one family to an empirical voltage histogram by minimizing the
// discretized KL divergence with Nelder-Mead, starting from moment matching.
inline FitResult fit_level_distribution(const Histogram& empirical, FitFamily family,
                                        const NelderMeadOptions& opts = {2000, 1e-7, 1e-11}) {
  if (empirical.total == 0) throw fit_error("cannot fit an empty histogram");
  int occupied = 0;
  for (const auto c : empirical.counts) occupied += c > 0;
  if (occupied < 2) throw fit_error("degenerate histogram: fewer than two occupied bins");

  const auto p = empirical.normalized();
  double mean = 0.0;
  for (std::size_t b = 0; b < p.size(); ++b) mean += static_cast<double>(b) * p[b];
  double var = 0.0;
  for (std::size_t b = 0; b < p.size(); ++b) {
    const double d = static_cast<double>(b) - mean;
    var += d * d * p[b];
  }
  const double sd = std::sqrt(var);

  std::vector<double> theta0;
  switch (family) {
    case FitFamily::gaussian:
      theta0 = {mean, std::log(sd)};
      break;
    case FitFamily::normal_laplace:
      // Rates 2/sd put half the variance in the tails; the Gaussian core
      // keeps the other half.
      theta0 = {mean, std::log(sd / std::sqrt(2.0)), std::log(2.0 / sd), std::log(2.0 / sd)};
      break;
    case FitFamily::student_t:
      // nu = 5: var = scale^2 * nu / (nu - 2).
      theta0 = {mean, std::log(sd * std::sqrt(3.0 / 5.0)), std::log(5.0)};
      break;
  }

  bool floored = false;
  const auto objective = [&](const std::vector<double>& theta) {
    const auto params = detail::fit_params_from_theta(family, theta);
    const auto q = discretize_pdf([&](double x) { return detail::fit_pdf(family, params, x); },
                                  empirical.bin_count());
    return kl_divergence(empirical, q);
  };

  const NelderMeadResult nm = nelder_mead(objective, theta0, opts);

  FitResult res;
  res.family = family;
  res.params = detail::fit_params_from_theta(family, nm.x);
  res.iterations = nm.iterations;
  res.max_iter_reached = nm.max_iter_reached;
  const auto q = discretize_pdf(
      [&](double x) { return detail::fit_pdf(family, res.params, x); }, empirical.bin_count());
  res.kl = kl_divergence(empirical, q, &floored);
  res.eps_floored = floored;
  return res;
}

}  // namespace flashgen
