#include "dwr/goal.hpp"

#include "dwr/assembly.hpp"

namespace dwr {

double MeanValueGoal::value(const DiscreteFunction& u) const
{
  DiscreteFunction v = u;
  v.distribute();
  return integrate(v);
}

double MeanValueGoal::derivative(const DiscreteFunction&, const DiscreteFunction& v) const
{
  DiscreteFunction w = v;
  w.distribute(true);
  return integrate(w);
}

std::vector<double> MeanValueGoal::derivative_vector(const DiscreteFunction&,
                                                     const Space& test) const
{
  return test.condense(assemble_unit_load_full(test));
}

int PointValueGoal::locate_vertex(const Mesh& mesh) const
{
  const double tol = 1e-12 * (1.0 + point_.norm());
  int found = -1;
  for (int v = 0; v < static_cast<int>(mesh.vertices.size()); ++v) {
    if ((mesh.vertices[v] - point_).norm() > tol) continue;
    if (found >= 0)
      throw ConfigError("evaluation point matches a duplicated slit vertex; not a valid "
                        "point-value location");
    found = v;
  }
  if (found < 0)
    throw ConfigError("evaluation point is not a vertex of the current mesh");
  return found;
}

double PointValueGoal::value(const DiscreteFunction& u) const
{
  const int v = locate_vertex(u.space->mesh());
  DiscreteFunction w = u;
  w.distribute();
  return w.coeff[v]; // vertex dofs are numbered by vertex id
}

double PointValueGoal::derivative(const DiscreteFunction&, const DiscreteFunction& v) const
{
  const int vid = locate_vertex(v.space->mesh());
  DiscreteFunction w = v;
  w.distribute(true);
  return w.coeff[vid];
}

std::vector<double> PointValueGoal::derivative_vector(const DiscreteFunction&,
                                                      const Space& test) const
{
  const int vid = locate_vertex(test.mesh());
  std::vector<double> full(test.n_dofs(), 0.0);
  full[vid] = 1.0;
  return test.condense(full);
}

std::optional<std::pair<int, double>> PointValueGoal::nodal_derivative(
    const DiscreteFunction& v) const
{
  const int vid = locate_vertex(v.space->mesh());
  return std::make_pair(vid, v.coeff[vid]); // vertex dofs are numbered by vertex id
}

} // namespace dwr
