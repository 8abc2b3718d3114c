#ifndef DWR_QUADRATURE_HPP
#define DWR_QUADRATURE_HPP

#include <vector>

#include "dwr/common.hpp"

namespace dwr {

/// Tensor-product Gauss-Legendre rule on the reference square [0,1]^2.
/// Weights sum to one; a rule of exactness `order` integrates bivariate
/// polynomials up to that total degree per coordinate exactly.
struct QuadratureRule {
  std::vector<Vec2> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

/// 1D Gauss-Legendre nodes/weights on [0,1] with n points (exact to degree 2n-1).
void gauss_legendre_1d(int n, std::vector<double>& points, std::vector<double>& weights);

/// Smallest tensor Gauss-Legendre rule exact for the requested polynomial order.
QuadratureRule make_quadrature(int order);

} // namespace dwr

#endif
