#ifndef DWR_ASSEMBLY_HPP
#define DWR_ASSEMBLY_HPP

#include <vector>

#include "dwr/problem.hpp"
#include "dwr/sparse.hpp"

namespace dwr {

/// Quadrature exactness used for every pairing: 2*degree+3 with the highest
/// participating degree. The p-Laplace coefficients are not polynomial, so a
/// modestly elevated rule keeps quadrature error below the estimator parts.
int pairing_order(int max_degree);

/// A(u)(w) for functions on (possibly different-degree) spaces over one mesh.
double residual_apply(const Problem& prob, const DiscreteFunction& u, const DiscreteFunction& w);

/// A'(u)(du, v)
double jacobian_apply(const Problem& prob, const DiscreteFunction& u, const DiscreteFunction& du,
                      const DiscreteFunction& v);

/// A''(u)(du1, du2, v)
double second_apply(const Problem& prob, const DiscreteFunction& u, const DiscreteFunction& du1,
                    const DiscreteFunction& du2, const DiscreteFunction& v);

/// A'''(u)(du1, du2, du3, v)
double third_apply(const Problem& prob, const DiscreteFunction& u, const DiscreteFunction& du1,
                   const DiscreteFunction& du2, const DiscreteFunction& du3,
                   const DiscreteFunction& v);

/// Residual vector A(u)(phi_i) over all raw basis functions of `test`.
std::vector<double> assemble_residual_full(const Problem& prob, const DiscreteFunction& u,
                                           const Space& test);

/// Condensed residual over the free dofs of `test`.
std::vector<double> assemble_residual(const Problem& prob, const DiscreteFunction& u,
                                      const Space& test);

/// Condensed Jacobian: entry (i,j) = A'(u)(phi_j, phi_i) with constraints
/// eliminated symmetrically on both sides.
SparseMatrix assemble_jacobian(const Problem& prob, const DiscreteFunction& u, const Space& trial,
                               const Space& test);

/// Load vector (1, phi_i) over all raw basis functions of `test`.
std::vector<double> assemble_unit_load_full(const Space& test);

/// Integral of a discrete function over the domain.
double integrate(const DiscreteFunction& u);

/// Coordinates of the free dofs of a space (fill-reducing ordering input).
std::vector<Vec2> free_dof_coordinates(const Space& space);

} // namespace dwr

#endif
