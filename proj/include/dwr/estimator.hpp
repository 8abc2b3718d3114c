#ifndef DWR_ESTIMATOR_HPP
#define DWR_ESTIMATOR_HPP

#include <optional>
#include <vector>

#include "dwr/assembly.hpp"
#include "dwr/goal.hpp"

namespace dwr {

/// The five computable estimator parts and their total.
///
/// Sign convention: eta_k is stored as A(u~)(z~) = -rho(u~)(z~), so that
///   total = eta_h2 - eta_k + eta_R + eta_u2 + eta_z2
/// holds as stored and, for linear problems with linear goals and arbitrary
/// admissible inputs, telescopes exactly to J(u2) - J(u~). (Expanding the
/// five pairings for a bilinear form cancels every term except the goal
/// difference only with this sign of the iteration part.)
struct EstimatorParts {
  double eta_h2 = 0.0; // discretization part, 1/2 rho(u~)(z2-z~) + 1/2 rho*(u~,z~)(u2-u~)
  double eta_k = 0.0;  // iteration part, A(u~)(z~)
  double eta_R = 0.0;  // trapezoidal-rule remainder
  double eta_u2 = 0.0; // primal approximation quality, -rho(u2)((z2+z~)/2)
  double eta_z2 = 0.0; // adjoint approximation quality, 1/2 rho*(u2,z2)(u2-u~)
  double total = 0.0;

  /// |eta_h2 - eta_k + eta_R|: discretization + iteration + remainder, the
  /// reference magnitude for enrichment decisions and stopping.
  double combo_abs() const;
};

/// Per-node signed contributions of eta_h2 under the partition-of-unity
/// localization, plus nonnegative per-cell indicators for marking. Hanging
/// nodes contribute through their masters.
struct LocalizedIndicators {
  std::vector<double> node_contrib;   // indexed by Q1 dof (= vertex id)
  std::vector<double> cell_indicator; // indexed by cell id, active cells only
  double node_sum = 0.0;
};

struct EffectivityReport {
  std::optional<double> i_eff;
  std::optional<double> i_eff_h;
  std::optional<double> i_eff_R;
  std::optional<double> b_h;          // |J_ref - J(u2)| / |J_ref - J(u~)|
  double gamma_partial = 0.0;         // computable portion of the gamma bound
  bool defined = false;               // false when the true error vanishes
};

struct BoundCheck {
  double estimator_abs = 0.0;
  double lower_bound = 0.0; // |J-J(u~)| - |J-J(u2)|
  double upper_bound = 0.0; // |J-J(u~)| + |J-J(u2)|
  double lower_slack = 0.0; // estimator_abs - lower_bound
  double upper_slack = 0.0; // upper_bound - estimator_abs
  bool lower_ok = false;
  bool upper_ok = false;
  double b_h = 0.0;
  std::optional<double> c_lower; // 1/(1+b_h)
  std::optional<double> c_upper; // 1/(1-b_h), when b_h < 1
  std::optional<double> i_eff;
  bool i_eff_in_band = true; // I_eff in [1-b_h, 1+b_h] when b_h < 1
};

/// rho(u~)(w) = -A(u~)(w)
double rho(const Problem& prob, const DiscreteFunction& u_tilde, const DiscreteFunction& w);

/// rho*(u~,z~)(w) = J'(u~)(w) - A'(u~)(w, z~)
double rho_star(const Problem& prob, const Goal& goal, const DiscreteFunction& u_tilde,
                const DiscreteFunction& z_tilde, const DiscreteFunction& w);

/// Trapezoidal-rule remainder
///   1/2 int_0^1 [J'''(u~+se)(e,e,e) - A'''(u~+se)(e,e,e, z~+se*)
///                - 3 A''(u~+se)(e,e, e*)] s(s-1) ds
/// with e = u2 - u~ and e* = z2 - z~ formed in the enriched space. The s
/// integral uses Gauss-Legendre with s_points nodes.
double remainder(const Problem& prob, const Goal& goal, const DiscreteFunction& u_tilde,
                 const DiscreteFunction& z_tilde, const DiscreteFunction& u2,
                 const DiscreteFunction& z2, int s_points = 5);

/// All five parts. u_tilde/z_tilde live on the degree-1 space, u2/z2 on the
/// degree-2 space over the same mesh; differences are formed after embedding.
EstimatorParts compute_parts(const Problem& prob, const Goal& goal,
                             const DiscreteFunction& u_tilde, const DiscreteFunction& z_tilde,
                             const DiscreteFunction& u2, const DiscreteFunction& z2,
                             int s_points = 5);

/// Partition-of-unity localization of eta_h2 over the degree-1 hat functions.
LocalizedIndicators localize_pu(const Problem& prob, const Goal& goal, const Space& pu_space,
                                const DiscreteFunction& u_tilde, const DiscreteFunction& z_tilde,
                                const DiscreteFunction& u2, const DiscreteFunction& z2);

EffectivityReport effectivity(const EstimatorParts& parts, double J_of_utilde,
                              std::optional<double> J_reference, std::optional<double> J_of_u2);

BoundCheck bound_check(const EstimatorParts& parts, double J_ref, double J_of_utilde,
                       double J_of_u2);

} // namespace dwr

#endif
