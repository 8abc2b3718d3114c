#include "dwr/problem.hpp"

#include <cmath>

namespace dwr {

DirichletMap PoissonProblem::dirichlet() const
{
  DirichletMap map;
  map[boundary_dirichlet] = [](Vec2) { return 0.0; };
  return map;
}

DirichletMap PLaplaceProblem::dirichlet() const
{
  DirichletMap map;
  map[boundary_dirichlet] = [](Vec2) { return 0.0; };
  return map;
}

double PLaplaceProblem::phi(double t) const
{
  return std::pow(t + eps_ * eps_, 0.5 * (p_ - 2.0));
}

double PLaplaceProblem::dphi(double t) const
{
  const double q = 0.5 * (p_ - 2.0);
  return q * std::pow(t + eps_ * eps_, q - 1.0);
}

double PLaplaceProblem::d2phi(double t) const
{
  const double q = 0.5 * (p_ - 2.0);
  return q * (q - 1.0) * std::pow(t + eps_ * eps_, q - 2.0);
}

double PLaplaceProblem::d3phi(double t) const
{
  const double q = 0.5 * (p_ - 2.0);
  return q * (q - 1.0) * (q - 2.0) * std::pow(t + eps_ * eps_, q - 3.0);
}

Vec2 PLaplaceProblem::flux(Vec2 g) const
{
  return phi(g.dot(g)) * g;
}

Vec2 PLaplaceProblem::flux_grad(Vec2 g, Vec2 h) const
{
  const double t = g.dot(g);
  return phi(t) * h + 2.0 * dphi(t) * g.dot(h) * g;
}

Vec2 PLaplaceProblem::flux_hess(Vec2 g, Vec2 h, Vec2 k) const
{
  const double t = g.dot(g);
  const double gh = g.dot(h), gk = g.dot(k), hk = h.dot(k);
  return 4.0 * d2phi(t) * gh * gk * g + 2.0 * dphi(t) * (hk * g + gh * k + gk * h);
}

Vec2 PLaplaceProblem::flux_third(Vec2 g, Vec2 h, Vec2 k, Vec2 l) const
{
  const double t = g.dot(g);
  const double gh = g.dot(h), gk = g.dot(k), gl = g.dot(l);
  const double hk = h.dot(k), hl = h.dot(l), kl = k.dot(l);
  return 8.0 * d3phi(t) * gh * gk * gl * g
       + 4.0 * d2phi(t) * ((hl * gk + kl * gh + hk * gl) * g + gh * gk * l + gh * gl * k + gk * gl * h)
       + 2.0 * dphi(t) * (hk * l + hl * k + kl * h);
}

} // namespace dwr
