#ifndef DWR_DRIVER_HPP
#define DWR_DRIVER_HPP

#include <memory>
#include <string>

#include "dwr/estimator.hpp"
#include "dwr/newton.hpp"

namespace dwr {

/// c_u/c_z at or above this value mean "never solve enriched" (int mode);
/// negative values mean "always solve" (full mode).
inline constexpr double enrich_never_sentinel = 1e100;

struct RunConfig {
  std::string problem_kind = "poisson"; // poisson | plaplace
  double p = 4.0;
  double epsilon = 1e-10;
  int macro_subdivisions = 0; // 0: benchmark default

  std::string goal_kind = "mean"; // mean | point
  Vec2 point{-0.9, -0.9};
  std::optional<double> reference;

  double c_u = 0.5;
  double c_z = 0.5;
  double tol = 0.0;
  int max_levels = 10;
  double theta = 0.5;

  double kappa = 1e-2;
  int s_points = 5;
  LinearSolverKind linear = LinearSolverKind::direct;
};

enum class EnrichAction { interpolate, solve_adjoint, solve_primal, none };

std::string to_string(EnrichAction a);

/// Which enriched approximations have been solved (rather than interpolated)
/// on the current level. A solved slot stays solved for the whole level.
struct EnrichmentState {
  bool u_solved = false;
  bool z_solved = false;
};

struct StepTraceEntry {
  EnrichAction action = EnrichAction::interpolate;
  EstimatorParts parts;
};

struct LevelRecord {
  int level = 0;
  int dofs_primal = 0;
  int dofs_enriched = 0;
  EstimatorParts parts;
  double J_value = 0.0;
  std::optional<double> error; // |J_ref - J(u~)|
  std::optional<double> J_u2;  // goal value of the current enriched primal
  EffectivityReport eff;
  std::optional<BoundCheck> bounds;
  int z_solves_cum = 0;
  int u_solves_cum = 0;
  std::vector<StepTraceEntry> trace;
  double pu_mismatch = 0.0; // |sum of node contributions - eta_h2|
  bool tol_reached = false;
  NewtonReport newton;
};

struct RunResult {
  std::vector<LevelRecord> records;
  bool converged = false; // TOL reached before max_levels
};

struct MarkResult {
  std::vector<int> cells;
  bool all_zero = false;
};

/// Bulk (Doerfler) criterion: the smallest set of cells, by descending
/// indicator with cell-id tie break, whose indicators sum to theta times the
/// total. All-zero indicators mark nothing and set the flag.
MarkResult mark_cells(const LocalizedIndicators& indicators, const Mesh& mesh, double theta);

/// First enrichment action the decision tests ask for, honoring the
/// once-per-level state: the adjoint test runs before the primal test.
EnrichAction decide_enrichment(const EstimatorParts& parts, double c_u, double c_z,
                               const EnrichmentState& state);

std::unique_ptr<Problem> make_problem(const RunConfig& config);
std::unique_ptr<Goal> make_goal(const RunConfig& config);
Mesh make_initial_mesh(const RunConfig& config);
std::optional<double> reference_value(const RunConfig& config);

/// Called after each completed level with its record and the current mesh.
using LevelObserver = std::function<void(const LevelRecord&, const Mesh&)>;

/// The adaptive loop: solve / estimate with recovered weights / decide
/// enrichment / mark / refine, one record per level.
RunResult run_adaptive(const RunConfig& config, const LevelObserver& observer = {});

/// Reference path for the full mode: enriched adjoint and primal are solved
/// unconditionally on every level, in that order, without consulting the
/// decision tests.
RunResult run_adaptive_unconditional(const RunConfig& config, const LevelObserver& observer = {});

} // namespace dwr

#endif
