#include "dwr/driver.hpp"

#include <algorithm>
#include <cmath>

namespace dwr {

std::string to_string(EnrichAction a)
{
  switch (a) {
    case EnrichAction::interpolate: return "I";
    case EnrichAction::solve_adjoint: return "Z";
    case EnrichAction::solve_primal: return "U";
    default: return "none";
  }
}

namespace {

bool test_fires(double magnitude, double c, double combo)
{
  if (c < 0.0) return true;                    // full: always solve
  if (c >= enrich_never_sentinel) return false; // int: never solve
  return magnitude > c * combo;
}

} // namespace

EnrichAction decide_enrichment(const EstimatorParts& parts, double c_u, double c_z,
                               const EnrichmentState& state)
{
  const double combo = parts.combo_abs();
  if (!state.z_solved && test_fires(std::abs(parts.eta_z2), c_z, combo))
    return EnrichAction::solve_adjoint;
  if (!state.u_solved && test_fires(std::abs(parts.eta_u2), c_u, combo))
    return EnrichAction::solve_primal;
  return EnrichAction::none;
}

MarkResult mark_cells(const LocalizedIndicators& indicators, const Mesh& mesh, double theta)
{
  DWR_REQUIRE(theta > 0.0 && theta <= 1.0, "marking fraction must be in (0,1]");

  MarkResult result;
  std::vector<std::pair<double, int>> items;
  double total = 0.0;
  for (int c : mesh.active_cells()) {
    const double v = indicators.cell_indicator[c];
    total += v;
    if (v > 0.0) items.emplace_back(v, c);
  }
  if (total == 0.0 || items.empty()) {
    result.all_zero = true;
    return result;
  }

  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });

  const double target = theta * total * (1.0 - 1e-12);
  double sum = 0.0;
  for (const auto& [v, c] : items) {
    result.cells.push_back(c);
    sum += v;
    if (sum >= target) break;
  }
  return result;
}

std::unique_ptr<Problem> make_problem(const RunConfig& config)
{
  if (config.problem_kind == "poisson") return std::make_unique<PoissonProblem>();
  if (config.problem_kind == "plaplace")
    return std::make_unique<PLaplaceProblem>(config.p, config.epsilon);
  throw ConfigError("unknown problem kind '" + config.problem_kind + "'");
}

std::unique_ptr<Goal> make_goal(const RunConfig& config)
{
  if (config.goal_kind == "mean") return std::make_unique<MeanValueGoal>();
  if (config.goal_kind == "point") return std::make_unique<PointValueGoal>(config.point);
  throw ConfigError("unknown goal kind '" + config.goal_kind + "'");
}

Mesh make_initial_mesh(const RunConfig& config)
{
  DomainSpec spec;
  int macro = config.macro_subdivisions;
  if (config.problem_kind == "poisson") {
    spec.kind = DomainKind::unit_square;
    if (macro <= 0) macro = 1;
  } else {
    spec.kind = DomainKind::slit_square;
    // The point-value benchmark needs x_P = (-0.9,-0.9) as a macro vertex.
    if (macro <= 0) macro = config.goal_kind == "point" ? 20 : 4;
  }
  return Mesh::build_initial(spec, macro);
}

std::optional<double> reference_value(const RunConfig& config)
{
  if (config.reference) return config.reference;
  if (config.problem_kind == "poisson" && config.goal_kind == "mean")
    return 0.03514425373878841;
  if (config.problem_kind == "plaplace" && config.goal_kind == "mean") return 0.71755;
  if (config.problem_kind == "plaplace" && config.goal_kind == "point") return 0.04501097;
  return std::nullopt;
}

namespace {

RunResult run_impl(const RunConfig& config, bool unconditional, const LevelObserver& observer)
{
  DWR_REQUIRE(config.tol >= 0.0, "TOL must be nonnegative");
  DWR_REQUIRE(config.max_levels >= 1, "need at least one level");

  const auto prob = make_problem(config);
  const auto goal = make_goal(config);
  const std::optional<double> ref = reference_value(config);
  const DirichletMap dirichlet = prob->dirichlet();

  NewtonOptions newton_options;
  newton_options.linear = config.linear;

  RunResult result;
  auto mesh = std::make_unique<Mesh>(make_initial_mesh(config));

  std::unique_ptr<Mesh> prev_mesh;
  std::unique_ptr<Space> prev_space1;
  DiscreteFunction prev_u, prev_z;
  std::optional<double> prev_eta_h2;

  int z_cum = 0;
  int u_cum = 0;

  for (int level = 1; level <= config.max_levels; ++level) {
    auto space1 = std::make_unique<Space>(*mesh, 1, dirichlet);
    auto space2 = std::make_unique<Space>(*mesh, 2, dirichlet);

    // Primal solve, seeded with the previous level's solution.
    DiscreteFunction u0(*space1);
    DiscreteFunction z_seed;
    StoppingRule rule;
    rule.kappa = config.kappa;
    rule.eta_h2_scale = prev_eta_h2;
    if (prev_space1) {
      u0 = transfer_to_refined(prev_u, *space1);
      z_seed = transfer_to_refined(prev_z, *space1);
      rule.z_ref = &z_seed;
      rule.min_iterations = 1; // the transferred weight is stale on this mesh
    } else {
      u0.distribute();
    }
    auto [utilde, newton_report] = newton_solve(*prob, *space1, u0, rule, newton_options);

    // Adjoint solve at the primal solution.
    DiscreteFunction ztilde = adjoint_solve(*prob, *goal, *space1, utilde, config.linear);

    // Recovered enriched weights.
    DiscreteFunction u2 = interpolate_enriched(utilde, *space2);
    DiscreteFunction z2 = interpolate_enriched(ztilde, *space2);

    LevelRecord rec;
    rec.level = level;
    rec.dofs_primal = space1->n_dofs();
    rec.dofs_enriched = space2->n_dofs();
    rec.newton = newton_report;

    EstimatorParts parts =
        compute_parts(*prob, *goal, utilde, ztilde, u2, z2, config.s_points);
    rec.trace.push_back({EnrichAction::interpolate, parts});

    EnrichmentState state;
    int forced_step = 0;
    for (;;) {
      EnrichAction action;
      if (unconditional) {
        action = forced_step == 0 ? EnrichAction::solve_adjoint
               : forced_step == 1 ? EnrichAction::solve_primal
                                  : EnrichAction::none;
        ++forced_step;
      } else {
        action = decide_enrichment(parts, config.c_u, config.c_z, state);
      }
      if (action == EnrichAction::none) break;

      if (action == EnrichAction::solve_adjoint) {
        z2 = adjoint_solve(*prob, *goal, *space2, u2, config.linear);
        state.z_solved = true;
        ++z_cum;
      } else {
        StoppingRule enriched_rule;
        enriched_rule.kappa = config.kappa;
        enriched_rule.eta_h2_scale = std::abs(parts.eta_h2);
        enriched_rule.z_ref = &z2;
        auto [u2_solved, rep2] = newton_solve(*prob, *space2, u2, enriched_rule, newton_options);
        (void)rep2;
        u2 = std::move(u2_solved);
        state.u_solved = true;
        ++u_cum;
      }
      parts = compute_parts(*prob, *goal, utilde, ztilde, u2, z2, config.s_points);
      rec.trace.push_back({action, parts});
    }

    rec.parts = parts;
    rec.z_solves_cum = z_cum;
    rec.u_solves_cum = u_cum;
    rec.J_value = goal->value(utilde);
    rec.J_u2 = goal->value(u2);
    if (ref) {
      rec.error = std::abs(*ref - rec.J_value);
      rec.bounds = bound_check(parts, *ref, rec.J_value, *rec.J_u2);
    }
    rec.eff = effectivity(parts, rec.J_value, ref, rec.J_u2);

    const LocalizedIndicators indicators =
        localize_pu(*prob, *goal, *space1, utilde, ztilde, u2, z2);
    rec.pu_mismatch = std::abs(indicators.node_sum - parts.eta_h2);

    const double stop_sum =
        parts.combo_abs() + std::abs(parts.eta_z2) + std::abs(parts.eta_u2);
    rec.tol_reached = stop_sum < config.tol;
    result.records.push_back(std::move(rec));
    if (observer) observer(result.records.back(), *mesh);

    if (result.records.back().tol_reached) {
      result.converged = true;
      break;
    }
    if (level == config.max_levels) break;

    const MarkResult marked = mark_cells(indicators, *mesh, config.theta);
    if (marked.cells.empty()) break; // nothing left to refine

    Mesh next = mesh->refined(marked.cells);

    prev_u = std::move(utilde);
    prev_z = std::move(ztilde);
    prev_eta_h2 = std::abs(parts.eta_h2);
    prev_space1 = std::move(space1);
    prev_mesh = std::move(mesh);
    mesh = std::make_unique<Mesh>(std::move(next));
  }

  return result;
}

} // namespace

RunResult run_adaptive(const RunConfig& config, const LevelObserver& observer)
{
  return run_impl(config, false, observer);
}

RunResult run_adaptive_unconditional(const RunConfig& config, const LevelObserver& observer)
{
  return run_impl(config, true, observer);
}

} // namespace dwr
