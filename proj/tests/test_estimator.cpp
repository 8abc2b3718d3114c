#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dwr/estimator.hpp"
#include "dwr/newton.hpp"

using namespace dwr;

namespace {

struct Setup {
  Mesh mesh;
  std::unique_ptr<Space> q1;
  std::unique_ptr<Space> q2;

  Setup(Mesh m, const DirichletMap& bc) : mesh(std::move(m))
  {
    q1 = std::make_unique<Space>(mesh, 1, bc);
    q2 = std::make_unique<Space>(mesh, 2, bc);
  }
};

Setup poisson_setup(bool with_hanging)
{
  Mesh m = Mesh::build_initial(DomainSpec{DomainKind::unit_square}, 2);
  if (with_hanging) m = m.refined({m.active_cells()[5], m.active_cells()[10]});
  return Setup(std::move(m), PoissonProblem().dirichlet());
}

DiscreteFunction random_admissible(const Space& space, unsigned seed, double amp = 0.05)
{
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-amp, amp);
  DiscreteFunction f(space);
  for (auto& c : f.coeff) c = dist(rng);
  f.distribute(); // homogeneous Dirichlet data in all benchmarks
  return f;
}

} // namespace

TEST_CASE("rho is the negated residual pairing")
{
  const Setup s = poisson_setup(true);
  const PoissonProblem prob;
  const DiscreteFunction u = random_admissible(*s.q1, 1);
  const DiscreteFunction w = random_admissible(*s.q2, 2);
  CHECK(rho(prob, u, w) == -residual_apply(prob, u, w)); // bitwise
}

TEST_CASE("rho vanishes on the test space of the solved problem")
{
  const Setup s = poisson_setup(true);
  const PoissonProblem prob;
  StoppingRule stop;
  auto [u, rep] = newton_solve(prob, *s.q1, DiscreteFunction(*s.q1), stop);
  const DiscreteFunction w = random_admissible(*s.q1, 3, 1.0);
  CHECK(std::abs(rho(prob, u, w)) <= 1e-11);
}

TEST_CASE("rho of zero against the constant one is the domain area")
{
  const Mesh m = Mesh::build_initial(DomainSpec{DomainKind::unit_square}, 1);
  const Space neumann(m, 1, {});
  const PoissonProblem prob;
  DiscreteFunction zero(neumann);
  DiscreteFunction one(neumann);
  for (auto& c : one.coeff) c = 1.0;
  CHECK(rho(prob, zero, one) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("rho_star vanishes at the discrete adjoint and is linear in w")
{
  const Setup s = poisson_setup(true);
  const PoissonProblem prob;
  const MeanValueGoal goal;
  StoppingRule stop;
  auto [u, rep] = newton_solve(prob, *s.q1, DiscreteFunction(*s.q1), stop);
  const DiscreteFunction z = adjoint_solve(prob, goal, *s.q1, u);

  const DiscreteFunction w = random_admissible(*s.q1, 4, 1.0);
  CHECK(std::abs(rho_star(prob, goal, u, z, w)) <= 1e-11);

  // z = 0: rho_star reduces to the mean of w
  const DiscreteFunction z0(*s.q1);
  const DiscreteFunction wq2 = random_admissible(*s.q2, 5, 1.0);
  CHECK(rho_star(prob, goal, u, z0, wq2) ==
        doctest::Approx(goal.derivative(u, wq2)).epsilon(1e-13));

  // linearity in w
  const double r1 = rho_star(prob, goal, u, z, wq2);
  const DiscreteFunction w3 = 3.0 * wq2;
  CHECK(rho_star(prob, goal, u, z, w3) == doctest::Approx(3.0 * r1).epsilon(1e-12));
}

TEST_CASE("linear exactness: the five parts telescope to the goal difference")
{
  // The identity holds for arbitrary admissible inputs, not only Galerkin
  // solutions; the oracle is direct goal evaluation of both approximations.
  for (bool hanging : {false, true}) {
    const Setup s = poisson_setup(hanging);
    const PoissonProblem prob;
    const MeanValueGoal goal;

    const DiscreteFunction u_arb = random_admissible(*s.q1, 6);
    const DiscreteFunction z_arb = random_admissible(*s.q1, 7);

    // exactly solved enriched problems
    StoppingRule stop;
    auto [u2, rep] = newton_solve(prob, *s.q2, DiscreteFunction(*s.q2), stop);
    const DiscreteFunction z2 = adjoint_solve(prob, goal, *s.q2, u2);

    const EstimatorParts parts = compute_parts(prob, goal, u_arb, z_arb, u2, z2);
    const double expected = goal.value(u2) - goal.value(u_arb);
    CHECK(parts.eta_R == 0.0);
    CHECK(parts.total == doctest::Approx(expected).epsilon(1e-11));
    // the stored invariant
    CHECK(parts.total ==
          doctest::Approx(parts.eta_h2 - parts.eta_k + parts.eta_R + parts.eta_u2 + parts.eta_z2)
              .epsilon(1e-14));
  }
}

TEST_CASE("new terms vanish for exactly solved enriched problems")
{
  const Setup s = poisson_setup(true);
  const PoissonProblem prob;
  const MeanValueGoal goal;

  StoppingRule stop;
  auto [u, rep1] = newton_solve(prob, *s.q1, DiscreteFunction(*s.q1), stop);
  const DiscreteFunction z = adjoint_solve(prob, goal, *s.q1, u);
  auto [u2, rep2] = newton_solve(prob, *s.q2, embed(u, *s.q2), stop);
  const DiscreteFunction z2 = adjoint_solve(prob, goal, *s.q2, u2);

  const EstimatorParts parts = compute_parts(prob, goal, u, z, u2, z2);
  CHECK(std::abs(parts.eta_u2) <= 1e-9 * std::abs(parts.eta_h2));
  CHECK(std::abs(parts.eta_z2) <= 1e-9 * std::abs(parts.eta_h2));
  // iteration part of the converged solution is negligible
  CHECK(std::abs(parts.eta_k) <= 1e-11);
}

TEST_CASE("interpolated enriched functions zero out the difference parts")
{
  const Setup s = poisson_setup(true);
  const PoissonProblem prob;
  const MeanValueGoal goal;
  const DiscreteFunction u = random_admissible(*s.q1, 8);
  const DiscreteFunction z = random_admissible(*s.q1, 9);
  const DiscreteFunction u2 = embed(u, *s.q2);
  const DiscreteFunction z2 = embed(z, *s.q2);

  const EstimatorParts parts = compute_parts(prob, goal, u, z, u2, z2);
  CHECK(std::abs(parts.eta_h2) <= 1e-14);
  CHECK(std::abs(parts.eta_z2) <= 1e-14);
  CHECK(parts.eta_R == 0.0);
}

TEST_CASE("remainder vanishes for linear problems and zero error")
{
  const Setup s = poisson_setup(true);
  const PoissonProblem prob;
  const MeanValueGoal goal;
  const DiscreteFunction u = random_admissible(*s.q1, 10);
  const DiscreteFunction z = random_admissible(*s.q1, 11);
  const DiscreteFunction u2 = interpolate_enriched(u, *s.q2);
  const DiscreteFunction z2 = interpolate_enriched(z, *s.q2);
  CHECK(remainder(prob, goal, u, z, u2, z2) == 0.0);

  // e = 0: integrand vanishes identically, also for nonlinear problems
  const PLaplaceProblem plap(4.0, 1e-10);
  const DiscreteFunction eu = embed(u, *s.q2);
  const DiscreteFunction ez = embed(z, *s.q2);
  CHECK(remainder(plap, goal, u, z, eu, ez) == 0.0);
}

TEST_CASE("remainder s-quadrature self-convergence")
{
  const Mesh m = Mesh::build_initial(DomainSpec{DomainKind::slit_square}, 2);
  const PLaplaceProblem prob(4.0, 1e-10);
  const MeanValueGoal goal;
  const Space q1(m, 1, prob.dirichlet());
  const Space q2(m, 2, prob.dirichlet());

  StoppingRule stop;
  auto [u, rep1] = newton_solve(prob, q1, DiscreteFunction(q1), stop);
  const DiscreteFunction z = adjoint_solve(prob, goal, q1, u);
  auto [u2, rep2] = newton_solve(prob, q2, interpolate_enriched(u, q2), stop);
  const DiscreteFunction z2 = adjoint_solve(prob, goal, q2, u2);

  const double r5 = remainder(prob, goal, u, z, u2, z2, 5);
  const double r9 = remainder(prob, goal, u, z, u2, z2, 9);
  REQUIRE(r5 != 0.0);
  CHECK(std::abs(r5 - r9) <= 1e-3 * std::abs(r9));
}

TEST_CASE("partition-of-unity localization sums to eta_h2")
{
  const Setup s = poisson_setup(true);
  const PoissonProblem prob;
  const MeanValueGoal goal;

  const DiscreteFunction u = random_admissible(*s.q1, 12);
  const DiscreteFunction z = random_admissible(*s.q1, 13);
  StoppingRule stop;
  auto [u2, rep] = newton_solve(prob, *s.q2, DiscreteFunction(*s.q2), stop);
  const DiscreteFunction z2 = adjoint_solve(prob, goal, *s.q2, u2);

  const EstimatorParts parts = compute_parts(prob, goal, u, z, u2, z2);
  const LocalizedIndicators loc = localize_pu(prob, goal, *s.q1, u, z, u2, z2);
  CHECK(loc.node_sum ==
        doctest::Approx(parts.eta_h2).epsilon(1e-12));

  // cell indicators are nonnegative and only on active cells
  for (int c : s.mesh.active_cells()) CHECK(loc.cell_indicator[c] >= 0.0);

  // embedded enriched functions produce identically zero contributions
  const DiscreteFunction ue = embed(u, *s.q2);
  const DiscreteFunction ze = embed(z, *s.q2);
  const LocalizedIndicators zero = localize_pu(prob, goal, *s.q1, u, z, ue, ze);
  for (double v : zero.node_contrib) CHECK(std::abs(v) <= 1e-15);
}

TEST_CASE("point-goal localization also sums to eta_h2")
{
  const Mesh m = Mesh::build_initial(DomainSpec{DomainKind::slit_square}, 4);
  const PLaplaceProblem prob(4.0, 1e-10);
  const PointValueGoal goal({-0.5, -0.5});
  const Space q1(m, 1, prob.dirichlet());
  const Space q2(m, 2, prob.dirichlet());

  StoppingRule stop;
  auto [u, rep1] = newton_solve(prob, q1, DiscreteFunction(q1), stop);
  const DiscreteFunction z = adjoint_solve(prob, goal, q1, u);
  const DiscreteFunction u2 = interpolate_enriched(u, q2);
  const DiscreteFunction z2 = interpolate_enriched(z, q2);

  const EstimatorParts parts = compute_parts(prob, goal, u, z, u2, z2);
  const LocalizedIndicators loc = localize_pu(prob, goal, q1, u, z, u2, z2);
  CHECK(loc.node_sum == doctest::Approx(parts.eta_h2).epsilon(1e-12));
}

TEST_CASE("symmetric data produce a symmetric indicator field")
{
  const Mesh m = Mesh::build_initial(DomainSpec{DomainKind::unit_square}, 2);
  const PoissonProblem prob;
  const MeanValueGoal goal;
  const Space q1(m, 1, prob.dirichlet());
  const Space q2(m, 2, prob.dirichlet());

  StoppingRule stop;
  auto [u, rep1] = newton_solve(prob, q1, DiscreteFunction(q1), stop);
  const DiscreteFunction z = adjoint_solve(prob, goal, q1, u);
  const DiscreteFunction u2 = interpolate_enriched(u, q2);
  const DiscreteFunction z2 = interpolate_enriched(z, q2);
  const LocalizedIndicators loc = localize_pu(prob, goal, q1, u, z, u2, z2);

  auto indicator_at = [&](double x, double y) {
    for (int c : m.active_cells()) {
      Vec2 p;
      double h;
      m.cell_geometry(c, p, h);
      if (std::abs(p.x - x) < 1e-12 && std::abs(p.y - y) < 1e-12) return loc.cell_indicator[c];
    }
    FAIL("cell not found");
    return 0.0;
  };
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double x = 0.25 * i, y = 0.25 * j;
      const double ref = indicator_at(x, y);
      CHECK(indicator_at(0.75 - x, y) == doctest::Approx(ref).epsilon(1e-10));
      CHECK(indicator_at(x, 0.75 - y) == doctest::Approx(ref).epsilon(1e-10));
      CHECK(indicator_at(y, x) == doctest::Approx(ref).epsilon(1e-10));
    }
}

TEST_CASE("effectivity report")
{
  EstimatorParts parts;
  parts.eta_h2 = 0.095;
  parts.eta_k = 0.0;
  parts.total = 0.1;

  // total equal to the true error: I_eff = 1
  const EffectivityReport rep = effectivity(parts, 0.9, 1.0, 0.99);
  REQUIRE(rep.defined);
  CHECK(*rep.i_eff == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(*rep.i_eff_h == doctest::Approx(0.95).epsilon(1e-14));
  CHECK(*rep.b_h == doctest::Approx(0.1).epsilon(1e-13));

  // zero true error: indices undefined instead of dividing
  const EffectivityReport undef = effectivity(parts, 1.0, 1.0, 0.99);
  CHECK_FALSE(undef.defined);
  CHECK_FALSE(undef.i_eff.has_value());
}

TEST_CASE("two-sided bound check")
{
  // synthetic: J_ref=1, J(u~)=0.9, J(u2)=0.99, total=0.095
  EstimatorParts parts;
  parts.total = 0.095;
  const BoundCheck check = bound_check(parts, 1.0, 0.9, 0.99);
  CHECK(check.lower_bound == doctest::Approx(0.09).epsilon(1e-13));
  CHECK(check.upper_bound == doctest::Approx(0.11).epsilon(1e-13));
  CHECK(check.lower_ok);
  CHECK(check.upper_ok);
  CHECK(check.b_h == doctest::Approx(0.1).epsilon(1e-12));

  // b_h = 0.25: the implied effectivity band is [0.75, 1.25]
  EstimatorParts p2;
  p2.total = 0.08;
  const BoundCheck c2 = bound_check(p2, 1.0, 0.9, 0.975);
  CHECK(c2.b_h == doctest::Approx(0.25).epsilon(1e-12));
  REQUIRE(c2.c_upper.has_value());
  CHECK(*c2.c_lower == doctest::Approx(1.0 / 1.25).epsilon(1e-12));
  CHECK(*c2.c_upper == doctest::Approx(1.0 / 0.75).epsilon(1e-12));
  CHECK(*c2.i_eff == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(c2.i_eff_in_band);

  // an estimator outside the bounds fails
  EstimatorParts p3;
  p3.total = 0.2;
  const BoundCheck c3 = bound_check(p3, 1.0, 0.9, 0.99);
  CHECK_FALSE(c3.upper_ok);
}

TEST_CASE("exactness identity on an exactly solved enriched pair implies the bounds")
{
  const Setup s = poisson_setup(true);
  const PoissonProblem prob;
  const MeanValueGoal goal;

  StoppingRule stop;
  auto [u, rep1] = newton_solve(prob, *s.q1, DiscreteFunction(*s.q1), stop);
  const DiscreteFunction z = adjoint_solve(prob, goal, *s.q1, u);
  auto [u2, rep2] = newton_solve(prob, *s.q2, embed(u, *s.q2), stop);
  const DiscreteFunction z2 = adjoint_solve(prob, goal, *s.q2, u2);
  const EstimatorParts parts = compute_parts(prob, goal, u, z, u2, z2);

  const double J_ref = 0.03514425373878841;
  const BoundCheck check = bound_check(parts, J_ref, goal.value(u), goal.value(u2));
  CHECK(check.lower_ok);
  CHECK(check.upper_ok);
  CHECK(check.i_eff_in_band);
}
