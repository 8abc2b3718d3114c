#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "dwr/driver.hpp"

using namespace dwr;

namespace {

RunConfig poisson_config(int levels)
{
  RunConfig config;
  config.problem_kind = "poisson";
  config.goal_kind = "mean";
  config.max_levels = levels;
  config.tol = 0.0;
  return config;
}

LocalizedIndicators indicators_for(const Mesh& mesh, const std::vector<double>& values)
{
  LocalizedIndicators ind;
  ind.cell_indicator.assign(mesh.cells.size(), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i)
    ind.cell_indicator[mesh.active_cells()[i]] = values[i];
  return ind;
}

bool is_ladder_subsequence(const std::vector<StepTraceEntry>& trace)
{
  const std::vector<EnrichAction> ladder = {EnrichAction::interpolate, EnrichAction::solve_adjoint,
                                            EnrichAction::solve_primal,
                                            EnrichAction::solve_adjoint};
  std::size_t pos = 0;
  for (const auto& step : trace) {
    while (pos < ladder.size() && ladder[pos] != step.action) ++pos;
    if (pos == ladder.size()) return false;
    ++pos;
  }
  return true;
}

} // namespace

TEST_CASE("enrichment decision ordering and state")
{
  EstimatorParts parts;
  parts.eta_h2 = 1.0;
  parts.eta_k = 0.0;
  parts.eta_R = 0.0;
  parts.eta_z2 = 1.0;
  parts.eta_u2 = 1.0;

  EnrichmentState state;
  // |eta_z2| = 1 > 0.5 * 1: the adjoint test fires first
  CHECK(decide_enrichment(parts, 0.5, 0.5, state) == EnrichAction::solve_adjoint);
  state.z_solved = true;
  CHECK(decide_enrichment(parts, 0.5, 0.5, state) == EnrichAction::solve_primal);
  state.u_solved = true;
  CHECK(decide_enrichment(parts, 0.5, 0.5, state) == EnrichAction::none);

  // full mode always fires, in algorithm order
  EnrichmentState full;
  CHECK(decide_enrichment(parts, -1.0, -1.0, full) == EnrichAction::solve_adjoint);
  full.z_solved = true;
  CHECK(decide_enrichment(parts, -1.0, -1.0, full) == EnrichAction::solve_primal);

  // int mode never fires
  EnrichmentState none;
  CHECK(decide_enrichment(parts, enrich_never_sentinel, enrich_never_sentinel, none) ==
        EnrichAction::none);

  // small parts do not fire in the default mode
  EstimatorParts quiet = parts;
  quiet.eta_z2 = 1e-8;
  quiet.eta_u2 = 1e-8;
  CHECK(decide_enrichment(quiet, 0.5, 0.5, EnrichmentState{}) == EnrichAction::none);
}

TEST_CASE("bulk marking")
{
  const Mesh mesh = Mesh::build_initial(DomainSpec{DomainKind::unit_square}, 1);
  const auto& cells = mesh.active_cells();

  // theta = 1 marks all cells with nonzero indicator
  auto all = mark_cells(indicators_for(mesh, {4.0, 0.0, 2.0, 1.0}), mesh, 1.0);
  CHECK(all.cells.size() == 3);
  CHECK_FALSE(all.all_zero);

  // (4,3,2,1), theta = 0.5: the two largest suffice (4+3 >= 5)
  auto half = mark_cells(indicators_for(mesh, {4.0, 3.0, 2.0, 1.0}), mesh, 0.5);
  REQUIRE(half.cells.size() == 2);
  CHECK(half.cells[0] == cells[0]);
  CHECK(half.cells[1] == cells[1]);

  // ties break towards lower cell ids
  auto ties = mark_cells(indicators_for(mesh, {2.0, 2.0, 2.0, 2.0}), mesh, 0.5);
  REQUIRE(ties.cells.size() == 2);
  CHECK(ties.cells[0] == cells[0]);
  CHECK(ties.cells[1] == cells[1]);

  // all-zero indicators mark nothing and set the flag
  auto zero = mark_cells(indicators_for(mesh, {0.0, 0.0, 0.0, 0.0}), mesh, 0.5);
  CHECK(zero.cells.empty());
  CHECK(zero.all_zero);

  CHECK_THROWS(mark_cells(indicators_for(mesh, {1.0, 1.0, 1.0, 1.0}), mesh, 0.0));
}

TEST_CASE("TOL controls termination")
{
  RunConfig config = poisson_config(3);
  const RunResult exact = run_adaptive(config);
  CHECK(exact.records.size() == 3);
  CHECK_FALSE(exact.converged);

  config.tol = 1e10;
  const RunResult immediate = run_adaptive(config);
  CHECK(immediate.records.size() == 1);
  CHECK(immediate.converged);
  CHECK(immediate.records.front().tol_reached);
}

TEST_CASE("int mode never solves enriched problems")
{
  RunConfig config = poisson_config(4);
  config.c_u = enrich_never_sentinel;
  config.c_z = enrich_never_sentinel;
  const RunResult result = run_adaptive(config);
  REQUIRE(result.records.size() == 4);
  for (const auto& rec : result.records) {
    CHECK(rec.z_solves_cum == 0);
    CHECK(rec.u_solves_cum == 0);
    CHECK(rec.trace.size() == 1);
    CHECK(rec.trace.front().action == EnrichAction::interpolate);
  }
}

TEST_CASE("full mode solves each enriched problem exactly once per level")
{
  RunConfig config = poisson_config(4);
  config.c_u = -1.0;
  config.c_z = -1.0;
  const RunResult result = run_adaptive(config);
  REQUIRE(result.records.size() == 4);
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const auto& rec = result.records[i];
    CHECK(rec.z_solves_cum == static_cast<int>(i) + 1);
    CHECK(rec.u_solves_cum == static_cast<int>(i) + 1);
    REQUIRE(rec.trace.size() == 3);
    CHECK(rec.trace[0].action == EnrichAction::interpolate);
    CHECK(rec.trace[1].action == EnrichAction::solve_adjoint);
    CHECK(rec.trace[2].action == EnrichAction::solve_primal);
  }
}

TEST_CASE("full mode equals the unconditional reference path exactly")
{
  RunConfig config = poisson_config(4);
  config.c_u = -1.0;
  config.c_z = -1.0;
  const RunResult a = run_adaptive(config);
  const RunResult b = run_adaptive_unconditional(config);

  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& ra = a.records[i];
    const auto& rb = b.records[i];
    CHECK(ra.dofs_primal == rb.dofs_primal);
    CHECK(ra.dofs_enriched == rb.dofs_enriched);
    CHECK(ra.J_value == rb.J_value);
    CHECK(ra.parts.eta_h2 == rb.parts.eta_h2);
    CHECK(ra.parts.eta_k == rb.parts.eta_k);
    CHECK(ra.parts.eta_R == rb.parts.eta_R);
    CHECK(ra.parts.eta_u2 == rb.parts.eta_u2);
    CHECK(ra.parts.eta_z2 == rb.parts.eta_z2);
    CHECK(ra.parts.total == rb.parts.total);
    CHECK(ra.z_solves_cum == rb.z_solves_cum);
    CHECK(ra.u_solves_cum == rb.u_solves_cum);
    REQUIRE(ra.trace.size() == rb.trace.size());
    for (std::size_t k = 0; k < ra.trace.size(); ++k) {
      CHECK(ra.trace[k].action == rb.trace[k].action);
      CHECK(ra.trace[k].parts.total == rb.trace[k].parts.total);
    }
  }
}

TEST_CASE("step traces follow the enrichment ladder")
{
  for (const char* mode : {"new", "full", "int"}) {
    RunConfig config = poisson_config(5);
    if (std::string(mode) == "full") config.c_u = config.c_z = -1.0;
    if (std::string(mode) == "int") config.c_u = config.c_z = enrich_never_sentinel;
    const RunResult result = run_adaptive(config);
    int z_count = 0, u_count = 0;
    for (const auto& rec : result.records) {
      CHECK(rec.trace.size() <= 4);
      CHECK(rec.trace.front().action == EnrichAction::interpolate);
      CHECK(is_ladder_subsequence(rec.trace));
      for (const auto& step : rec.trace) {
        if (step.action == EnrichAction::solve_adjoint) ++z_count;
        if (step.action == EnrichAction::solve_primal) ++u_count;
      }
      // counters equal the number of solve actions in the traces
      CHECK(rec.z_solves_cum == z_count);
      CHECK(rec.u_solves_cum == u_count);
    }
  }
}

TEST_CASE("records carry consistent invariants")
{
  RunConfig config = poisson_config(5);
  const RunResult result = run_adaptive(config);
  REQUIRE(result.records.size() == 5);

  int prev_dofs = 0;
  for (const auto& rec : result.records) {
    // the five-part identity as stored
    const auto& p = rec.parts;
    CHECK(p.total ==
          doctest::Approx(p.eta_h2 - p.eta_k + p.eta_R + p.eta_u2 + p.eta_z2).epsilon(1e-14));
    // localization consistency, recorded as a mismatch value
    CHECK(rec.pu_mismatch <= 1e-12 * std::max(1e-30, std::abs(p.eta_h2)));
    // meshes grow
    CHECK(rec.dofs_primal > prev_dofs);
    prev_dofs = rec.dofs_primal;
    // the enriched space is the degree-2 space on the same mesh
    CHECK(rec.dofs_enriched > rec.dofs_primal);
    // reference is baked in for the Poisson mean benchmark
    REQUIRE(rec.error.has_value());
    REQUIRE(rec.bounds.has_value());
    CHECK(rec.bounds->lower_ok);
    CHECK(rec.bounds->upper_ok);
  }
}

TEST_CASE("p-Laplace integral benchmark runs on a few levels")
{
  RunConfig config;
  config.problem_kind = "plaplace";
  config.goal_kind = "mean";
  config.max_levels = 3;
  const RunResult result = run_adaptive(config);
  REQUIRE(result.records.size() == 3);
  for (const auto& rec : result.records) {
    CHECK(rec.newton.converged);
    REQUIRE(rec.error.has_value());
    CHECK(*rec.error < 0.1);
    CHECK(is_ladder_subsequence(rec.trace));
  }
  // goal values approach the reference from the coarse side
  CHECK(*result.records.back().error < *result.records.front().error);
}
