#include "dwr/quadrature.hpp"

#include <cmath>

namespace dwr {

void gauss_legendre_1d(int n, std::vector<double>& points, std::vector<double>& weights)
{
  DWR_REQUIRE(n >= 1, "Gauss rule needs at least one point");
  points.assign(n, 0.0);
  weights.assign(n, 0.0);

  // Newton iteration on Legendre polynomials over [-1,1], then map to [0,1].
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    points[i] = 0.5 * (1.0 - x); // descending x maps to ascending [0,1] points
    points[n - 1 - i] = 0.5 * (1.0 + x);
    weights[i] = 0.5 * w;
    weights[n - 1 - i] = 0.5 * w;
  }
  if (n % 2 == 1) points[n / 2] = 0.5;
}

QuadratureRule make_quadrature(int order)
{
  DWR_REQUIRE(order >= 0, "quadrature order must be nonnegative");
  const int n = (order + 2) / 2; // 2n-1 >= order

  std::vector<double> p, w;
  gauss_legendre_1d(n, p, w);

  QuadratureRule rule;
  rule.points.reserve(static_cast<std::size_t>(n) * n);
  rule.weights.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      rule.points.emplace_back(p[i], p[j]);
      rule.weights.push_back(w[i] * w[j]);
    }
  return rule;
}

} // namespace dwr
