#ifndef DWR_PROBLEM_HPP
#define DWR_PROBLEM_HPP

#include <memory>
#include <string>

#include "dwr/space.hpp"

namespace dwr {

/// Semilinear form A(u)(v) = (a(grad u), grad v) - (f, v) with directional
/// derivatives of the flux up to third order.
class Problem {
public:
  virtual ~Problem() = default;

  virtual Vec2 flux(Vec2 g) const = 0;
  /// a'(g) h
  virtual Vec2 flux_grad(Vec2 g, Vec2 h) const = 0;
  /// a''(g)(h,k), symmetric in (h,k)
  virtual Vec2 flux_hess(Vec2 g, Vec2 h, Vec2 k) const = 0;
  /// a'''(g)(h,k,l), symmetric in (h,k,l)
  virtual Vec2 flux_third(Vec2 g, Vec2 h, Vec2 k, Vec2 l) const = 0;

  virtual double source(Vec2 x) const = 0;

  /// Dirichlet data per boundary id for this problem.
  virtual DirichletMap dirichlet() const = 0;

  virtual std::string name() const = 0;
};

/// -laplace u = f with homogeneous Dirichlet data everywhere.
class PoissonProblem : public Problem {
public:
  Vec2 flux(Vec2 g) const override { return g; }
  Vec2 flux_grad(Vec2, Vec2 h) const override { return h; }
  Vec2 flux_hess(Vec2, Vec2, Vec2) const override { return {0.0, 0.0}; }
  Vec2 flux_third(Vec2, Vec2, Vec2, Vec2) const override { return {0.0, 0.0}; }
  double source(Vec2) const override { return 1.0; }
  DirichletMap dirichlet() const override;
  std::string name() const override { return "poisson"; }
};

/// Regularized p-Laplacian: a(g) = (|g|^2 + eps^2)^((p-2)/2) g, f = 1,
/// homogeneous Dirichlet on the Dirichlet part, natural (zero-flux) boundary
/// elsewhere.
class PLaplaceProblem : public Problem {
public:
  PLaplaceProblem(double p, double eps) : p_(p), eps_(eps) {}

  Vec2 flux(Vec2 g) const override;
  Vec2 flux_grad(Vec2 g, Vec2 h) const override;
  Vec2 flux_hess(Vec2 g, Vec2 h, Vec2 k) const override;
  Vec2 flux_third(Vec2 g, Vec2 h, Vec2 k, Vec2 l) const override;
  double source(Vec2) const override { return 1.0; }
  DirichletMap dirichlet() const override;
  std::string name() const override { return "plaplace"; }

  double p() const { return p_; }
  double eps() const { return eps_; }

private:
  double phi(double t) const;   // (t + eps^2)^q, q = (p-2)/2
  double dphi(double t) const;
  double d2phi(double t) const;
  double d3phi(double t) const;

  double p_;
  double eps_;
};

} // namespace dwr

#endif
