#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace flashgen {

struct NelderMeadOptions {
  int max_iter = 2000;
  double x_tol = 1e-9;
  double f_tol = 1e-12;
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
  bool max_iter_reached = false;
};

// Nelder-Mead downhill simplex with the standard coefficients: reflection 1,
// expansion 2, contraction 1/2, shrink 1/2. Deterministic given (objective,
// x0, opts). The initial simplex must evaluate finite; later trial points
// returning non-finite values are treated as +inf and rejected.
template <typename F>
NelderMeadResult nelder_mead(F&& objective, const std::vector<double>& x0,
                             const NelderMeadOptions& opts = {}) {
  const std::size_t n = x0.size();
  if (n == 0) throw std::invalid_argument("nelder_mead: empty start point");

  const auto safe_eval = [&](const std::vector<double>& x) {
    const double f = objective(x);
    return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  };

  // Initial simplex: x0 plus one perturbed vertex per coordinate.
  std::vector<std::vector<double>> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    double& c = xs[i + 1][i];
    c = c != 0.0 ? c * 1.05 : 0.00025;
  }
  for (std::size_t i = 0; i <= n; ++i) {
    fs[i] = objective(xs[i]);
    if (!std::isfinite(fs[i]))
      throw std::invalid_argument("nelder_mead: objective not finite on the initial simplex");
  }

  std::vector<std::size_t> order(n + 1);
  NelderMeadResult res;
  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    const std::size_t best = order[0], worst = order[n], second = order[n - 1];

    double xdiam = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t d = 0; d < n; ++d)
        xdiam = std::max(xdiam, std::abs(xs[order[i]][d] - xs[best][d]));
    if (xdiam < opts.x_tol || std::abs(fs[worst] - fs[best]) < opts.f_tol) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < n; ++d) centroid[d] += xs[i][d];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    const auto blend = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t d = 0; d < n; ++d) x[d] = centroid[d] + t * (centroid[d] - xs[worst][d]);
      return x;
    };

    const std::vector<double> xr = blend(1.0);
    const double fr = safe_eval(xr);
    if (fr < fs[best]) {
      const std::vector<double> xe = blend(2.0);
      const double fe = safe_eval(xe);
      if (fe < fr) {
        xs[worst] = xe;
        fs[worst] = fe;
      } else {
        xs[worst] = xr;
        fs[worst] = fr;
      }
      continue;
    }
    if (fr < fs[second]) {
      xs[worst] = xr;
      fs[worst] = fr;
      continue;
    }
    // Contraction: outside if the reflection improved on the worst vertex,
    // inside otherwise.
    const std::vector<double> xc = blend(fr < fs[worst] ? 0.5 : -0.5);
    const double fc = safe_eval(xc);
    if (fc < std::min(fr, fs[worst])) {
      xs[worst] = xc;
      fs[worst] = fc;
      continue;
    }
    // Shrink toward the best vertex.
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t d = 0; d < n; ++d) xs[i][d] = xs[best][d] + 0.5 * (xs[i][d] - xs[best][d]);
      fs[i] = safe_eval(xs[i]);
    }
  }
  res.max_iter_reached = res.iterations >= opts.max_iter;

  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (fs[i] < fs[best]) best = i;
  res.x = xs[best];
  res.f = fs[best];
  return res;
}

}  // namespace flashgen
