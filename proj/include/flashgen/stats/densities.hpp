#pragma once

#include <cmath>
#include <stdexcept>

#include "flashgen/sim/normal_laplace.hpp"

namespace flashgen {

struct GaussianParams {
  double mu = 0.0;
  double sigma = 1.0;

  void validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian sigma must be positive");
  }
};

inline double pdf_gaussian(double x, const GaussianParams& p) {
  const double z = (x - p.mu) / p.sigma;
  return std::exp(-0.5 * z * z) / (p.sigma * 2.5066282746310005024);  // sqrt(2 pi)
}

// Location-scale Student's t.
struct StudentTParams {
  double mu = 0.0;
  double scale = 1.0;
  double nu = 1.0;

  void validate() const {
    if (!(scale > 0.0) || !(nu > 0.0))
      throw std::invalid_argument("student-t scale and dof must be positive");
  }
};

inline double pdf_student_t(double x, const StudentTParams& p) {
  const double z = (x - p.mu) / p.scale;
  const double log_norm = std::lgamma(0.5 * (p.nu + 1.0)) - std::lgamma(0.5 * p.nu) -
                          0.5 * std::log(p.nu * 3.14159265358979323846) - std::log(p.scale);
  return std::exp(log_norm - 0.5 * (p.nu + 1.0) * std::log1p(z * z / p.nu));
}

}  // namespace flashgen
