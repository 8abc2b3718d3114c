#ifndef DWR_SPACE_HPP
#define DWR_SPACE_HPP

#include <array>
#include <functional>
#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dwr/mesh.hpp"
#include "dwr/quadrature.hpp"

namespace dwr {

/// 1D Lagrange shape values on [0,1], nodes at {0,1} (degree 1) or {0,1/2,1}.
double lagrange_value(int degree, int i, double x);
double lagrange_grad(int degree, int i, double x);

/// Affine expansion of a constrained dof: value = sum(w_k * x[master_k]) + inhom.
struct Constraint {
  std::vector<std::pair<int, double>> terms;
  double inhom = 0.0;
};

class ConstraintSet {
public:
  void add(int dof, Constraint c);
  bool is_constrained(int dof) const { return map_.count(dof) > 0; }
  const Constraint* get(int dof) const;
  int size() const { return static_cast<int>(map_.size()); }
  const std::vector<int>& constrained_dofs() const { return order_; }

  /// Rewrite all constraints in terms of unconstrained dofs only.
  void resolve();

  /// Overwrite constrained entries with their affine expansion. With
  /// `homogeneous` the inhomogeneities are dropped (increments, adjoints).
  void distribute(std::vector<double>& x, bool homogeneous = false) const;

private:
  std::unordered_map<int, Constraint> map_;
  std::vector<int> order_; // ascending dof ids, kept sorted
};

using DirichletMap = std::map<int, std::function<double(Vec2)>>;

/// Continuous Lagrange space of degree 1 or 2 on the active mesh, with
/// hanging-node and Dirichlet constraints. Dof layout: one dof per mesh
/// vertex first, then (degree 2) face dofs and cell dofs. On a hanging face
/// the coarse-side edge dof is identified with the fine-side midpoint vertex,
/// so dofs correspond to distinct support points.
class Space {
public:
  Space(const Mesh& mesh, int degree, const DirichletMap& dirichlet);

  const Mesh& mesh() const { return *mesh_; }
  int degree() const { return degree_; }
  int n_dofs() const { return n_dofs_; }
  int n_free() const { return static_cast<int>(free_dofs_.size()); }
  int n_local() const { return (degree_ + 1) * (degree_ + 1); }

  /// Global dof of local lexicographic node (i + (degree+1)*j) on a cell.
  int cell_dof(int cell, int local) const { return cell_dofs_[cell][local]; }
  const std::array<int, 9>& cell_dofs(int cell) const { return cell_dofs_[cell]; }

  Vec2 support_point(int dof) const { return support_points_[dof]; }
  const ConstraintSet& constraints() const { return constraints_; }

  int free_index(int dof) const { return free_index_[dof]; }
  const std::vector<int>& free_dofs() const { return free_dofs_; }

  /// Condense a full-length dof vector into free-dof entries, adding
  /// constrained-row contributions to their masters.
  std::vector<double> condense(const std::vector<double>& full) const;

private:
  void build_dofs();
  void build_constraints(const DirichletMap& dirichlet);

  const Mesh* mesh_;
  int degree_;
  int n_dofs_ = 0;
  std::vector<std::array<int, 9>> cell_dofs_;
  std::vector<Vec2> support_points_;
  std::unordered_map<std::uint64_t, int> face_dof_;
  ConstraintSet constraints_;
  std::vector<int> free_index_;
  std::vector<int> free_dofs_;
};

/// Finite element function: coefficient vector over the dofs of a space.
struct DiscreteFunction {
  const Space* space = nullptr;
  std::vector<double> coeff;

  DiscreteFunction() = default;
  explicit DiscreteFunction(const Space& s) : space(&s), coeff(s.n_dofs(), 0.0) {}

  /// Value and physical gradient at a reference point of an active cell.
  void evaluate(int cell, Vec2 ref, double& value, Vec2& gradient) const;
  double value_at(int cell, Vec2 ref) const;

  void distribute(bool homogeneous = false) { space->constraints().distribute(coeff, homogeneous); }
};

DiscreteFunction operator+(const DiscreteFunction& a, const DiscreteFunction& b);
DiscreteFunction operator-(const DiscreteFunction& a, const DiscreteFunction& b);
DiscreteFunction operator*(double s, const DiscreteFunction& a);

/// Nodal interpolant of an analytic function (constraints distributed).
DiscreteFunction nodal_interpolate(const Space& space, const std::function<double(Vec2)>& g);

/// Exact injection of a degree-1 function into the degree-2 space on the
/// same mesh: the result equals the input pointwise.
DiscreteFunction embed(const DiscreteFunction& f, const Space& enriched);

/// Patch-wise higher-order recovery: on every 2x2 sibling patch the result
/// is the unique biquadratic through the nine degree-1 nodal values of the
/// patch. Linear in f; reproduces patchwise-biquadratic nodal data exactly.
DiscreteFunction interpolate_enriched(const DiscreteFunction& f, const Space& enriched);

/// Nodal transfer of a degree-1 function onto a refinement of its mesh.
/// Values at new vertices are the exact parent-cell interpolated values.
DiscreteFunction transfer_to_refined(const DiscreteFunction& f, const Space& refined_space);

} // namespace dwr

#endif
