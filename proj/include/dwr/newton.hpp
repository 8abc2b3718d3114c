#ifndef DWR_NEWTON_HPP
#define DWR_NEWTON_HPP

#include <optional>
#include <utility>
#include <vector>

#include "dwr/assembly.hpp"
#include "dwr/goal.hpp"

namespace dwr {

struct NewtonReport {
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  std::vector<double> damping_history;
  std::vector<double> residual_history; // norm before each iteration and final
};

class NewtonError : public SolverError {
public:
  NewtonError(const std::string& what, NewtonReport rep)
      : SolverError(what), report(std::move(rep))
  {
  }
  NewtonReport report;
};

struct StoppingContext {
  std::optional<double> eta_k;  // iteration error rho(u~)(z~) of the current iterate
  std::optional<double> eta_h2; // discretization estimate to balance against
  double residual_norm = 0.0;
};

/// Estimator-aware stopping: stop once |eta_k| <= kappa |eta_h2|, with an
/// absolute residual fallback. The adjoint weight comes from the previous
/// level when no adjoint exists yet on the current one. A transferred weight
/// is blind to the new mesh (the transferred pair is Galerkin-orthogonal on
/// its origin mesh), so `min_iterations = 1` forces one update before the
/// balance test applies.
struct StoppingRule {
  double kappa = 1e-2;
  double abs_tol = 1e-12;
  int min_iterations = 0;
  std::optional<double> eta_h2_scale;
  const DiscreteFunction* z_ref = nullptr; // same space as the iterate

  bool evaluate(const StoppingContext& ctx) const
  {
    if (ctx.eta_k && ctx.eta_h2 && std::abs(*ctx.eta_k) <= kappa * std::abs(*ctx.eta_h2))
      return true;
    return ctx.residual_norm <= abs_tol;
  }
};

struct NewtonOptions {
  int max_iterations = 50;
  int max_halvings = 12;
  double step_cap = 1.0; // sup-norm cap on the raw update before backtracking
  LinearSolverKind linear = LinearSolverKind::direct;
};

/// Newton's method with backtracking line search. Each accepted step strictly
/// decreases the residual norm; the raw update is scaled down to the sup-norm
/// cap first, which keeps the first steps finite when the Jacobian at the
/// initial guess is nearly singular (p-Laplace flux at grad u = 0).
std::pair<DiscreteFunction, NewtonReport> newton_solve(const Problem& prob, const Space& space,
                                                       const DiscreteFunction& u0,
                                                       const StoppingRule& stop,
                                                       const NewtonOptions& options = {});

/// Adjoint solve: transpose(A'(u)) z = J'(u) on the given space, with
/// homogeneous values on constrained dofs.
DiscreteFunction adjoint_solve(const Problem& prob, const Goal& goal, const Space& space,
                               const DiscreteFunction& u,
                               LinearSolverKind linear = LinearSolverKind::direct);

} // namespace dwr

#endif
