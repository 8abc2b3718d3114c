#ifndef DWR_GOAL_HPP
#define DWR_GOAL_HPP

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dwr/space.hpp"

namespace dwr {

/// Quantity of interest J(u) with directional derivatives. The two goals in
/// scope (domain mean value, nodal point value) are linear, so J' does not
/// depend on u and the higher derivatives vanish.
class Goal {
public:
  virtual ~Goal() = default;

  virtual double value(const DiscreteFunction& u) const = 0;
  virtual double derivative(const DiscreteFunction& u, const DiscreteFunction& v) const = 0;

  virtual double second(const DiscreteFunction&, const DiscreteFunction&,
                        const DiscreteFunction&) const
  {
    return 0.0;
  }
  virtual double third(const DiscreteFunction&, const DiscreteFunction&, const DiscreteFunction&,
                       const DiscreteFunction&) const
  {
    return 0.0;
  }

  /// Condensed J'(u) load vector over the free dofs of a test space.
  virtual std::vector<double> derivative_vector(const DiscreteFunction& u,
                                                const Space& test) const = 0;

  /// Density j with J'(u)(v) = integral of j*v, when J' is an integral
  /// functional; zero for nodal functionals.
  virtual double derivative_density(const DiscreteFunction& u, Vec2 x) const
  {
    (void)u;
    (void)x;
    return 0.0;
  }

  /// Nodal payload (vertex id, J'(u)(v) contribution) for functionals tied
  /// to a single mesh vertex; disengaged for integral functionals.
  virtual std::optional<std::pair<int, double>> nodal_derivative(const DiscreteFunction& v) const
  {
    (void)v;
    return std::nullopt;
  }

  virtual std::string name() const = 0;
};

/// J(u) = integral of u over the domain.
class MeanValueGoal : public Goal {
public:
  double value(const DiscreteFunction& u) const override;
  double derivative(const DiscreteFunction& u, const DiscreteFunction& v) const override;
  std::vector<double> derivative_vector(const DiscreteFunction& u, const Space& test) const override;
  double derivative_density(const DiscreteFunction&, Vec2) const override { return 1.0; }
  std::string name() const override { return "mean"; }
};

/// J(u) = u(x_P) read from the nodal coefficient; x_P must be a mesh vertex.
class PointValueGoal : public Goal {
public:
  explicit PointValueGoal(Vec2 point) : point_(point) {}

  double value(const DiscreteFunction& u) const override;
  double derivative(const DiscreteFunction& u, const DiscreteFunction& v) const override;
  std::vector<double> derivative_vector(const DiscreteFunction& u, const Space& test) const override;
  std::optional<std::pair<int, double>> nodal_derivative(const DiscreteFunction& v) const override;
  std::string name() const override { return "point"; }

  Vec2 point() const { return point_; }

  /// Vertex id of x_P in the mesh; throws ConfigError if x_P is not a vertex
  /// or matches a duplicated slit vertex ambiguously.
  int locate_vertex(const Mesh& mesh) const;

private:
  Vec2 point_;
};

} // namespace dwr

#endif
