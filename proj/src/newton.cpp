#include "dwr/newton.hpp"

#include <algorithm>
#include <cmath>

namespace dwr {

namespace {

double inf_norm(const std::vector<double>& x)
{
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> solve_linear_system(const SparseMatrix& A, const std::vector<double>& b,
                                        const Space& space, LinearSolverKind kind)
{
  if (kind == LinearSolverKind::cg) return cg_solve(A, b);
  const std::vector<Vec2> coords = free_dof_coordinates(space);
  return linear_solve(A, b, &coords);
}

} // namespace

std::pair<DiscreteFunction, NewtonReport> newton_solve(const Problem& prob, const Space& space,
                                                       const DiscreteFunction& u0,
                                                       const StoppingRule& stop,
                                                       const NewtonOptions& options)
{
  DWR_REQUIRE(u0.space == &space, "initial guess lives on a different space");

  DiscreteFunction u = u0;
  u.distribute(); // enforce Dirichlet and hanging constraints on the start

  NewtonReport report;
  std::vector<double> residual = assemble_residual(prob, u, space);
  double rnorm = norm2(residual);

  for (int iter = 0;; ++iter) {
    report.residual_history.push_back(rnorm);
    StoppingContext ctx;
    ctx.residual_norm = rnorm;
    ctx.eta_h2 = stop.eta_h2_scale;
    if (stop.z_ref != nullptr) {
      const std::vector<double> full = assemble_residual_full(prob, u, space);
      ctx.eta_k = -dot(stop.z_ref->coeff, full);
    }
    if (iter >= stop.min_iterations && stop.evaluate(ctx)) {
      report.converged = true;
      report.iterations = iter;
      report.final_residual = rnorm;
      return {std::move(u), report};
    }
    if (iter >= options.max_iterations) {
      report.iterations = iter;
      report.final_residual = rnorm;
      throw NewtonError("Newton did not converge within the iteration limit", report);
    }

    const SparseMatrix J = assemble_jacobian(prob, u, space, space);
    std::vector<double> rhs = residual;
    for (double& v : rhs) v = -v;
    const std::vector<double> delta_free = solve_linear_system(J, rhs, space, options.linear);

    DiscreteFunction delta(space);
    for (int i = 0; i < space.n_free(); ++i) delta.coeff[space.free_dofs()[i]] = delta_free[i];
    delta.distribute(true);

    // Cap the raw step so the line search starts from a sane magnitude even
    // when the Jacobian at the current iterate is nearly singular.
    const double cap = std::max(options.step_cap, 10.0 * inf_norm(u.coeff));
    const double dmax = inf_norm(delta.coeff);
    double scale = dmax > cap ? cap / dmax : 1.0;

    bool accepted = false;
    for (int halving = 0; halving <= options.max_halvings; ++halving) {
      DiscreteFunction trial = u;
      for (std::size_t i = 0; i < trial.coeff.size(); ++i)
        trial.coeff[i] += scale * delta.coeff[i];
      std::vector<double> trial_residual = assemble_residual(prob, trial, space);
      const double trial_norm = norm2(trial_residual);
      if (trial_norm < rnorm) {
        u = std::move(trial);
        residual = std::move(trial_residual);
        rnorm = trial_norm;
        report.damping_history.push_back(scale);
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) {
      report.iterations = iter;
      report.final_residual = rnorm;
      throw NewtonError("Newton line search failed to decrease the residual", report);
    }
  }
}

DiscreteFunction adjoint_solve(const Problem& prob, const Goal& goal, const Space& space,
                               const DiscreteFunction& u, LinearSolverKind linear)
{
  const SparseMatrix J = assemble_jacobian(prob, u, space, space);
  const SparseMatrix Jt = J.transposed();
  const std::vector<double> rhs = goal.derivative_vector(u, space);
  const std::vector<double> z_free = solve_linear_system(Jt, rhs, space, linear);

  DiscreteFunction z(space);
  for (int i = 0; i < space.n_free(); ++i) z.coeff[space.free_dofs()[i]] = z_free[i];
  z.distribute(true); // homogeneous values on the Dirichlet part
  return z;
}

} // namespace dwr
