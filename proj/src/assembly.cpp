#include "dwr/assembly.hpp"

#include <algorithm>

namespace dwr {

namespace {

/// Shape values and reference gradients of one degree at fixed rule points.
struct ShapeTable {
  int degree = 0;
  int n_local = 0;
  std::vector<double> value; // [qp * n_local + l]
  std::vector<double> dx;
  std::vector<double> dy;

  ShapeTable(int deg, const QuadratureRule& rule) : degree(deg), n_local((deg + 1) * (deg + 1))
  {
    const int n1 = deg + 1;
    const std::size_t nq = rule.size();
    value.resize(nq * n_local);
    dx.resize(nq * n_local);
    dy.resize(nq * n_local);
    for (std::size_t q = 0; q < nq; ++q) {
      const Vec2 p = rule.points[q];
      for (int j = 0; j < n1; ++j)
        for (int i = 0; i < n1; ++i) {
          const int l = j * n1 + i;
          value[q * n_local + l] = lagrange_value(deg, i, p.x) * lagrange_value(deg, j, p.y);
          dx[q * n_local + l] = lagrange_grad(deg, i, p.x) * lagrange_value(deg, j, p.y);
          dy[q * n_local + l] = lagrange_value(deg, i, p.x) * lagrange_grad(deg, j, p.y);
        }
    }
  }
};

/// Evaluates one discrete function at the rule points of the current cell.
struct FunctionEval {
  const DiscreteFunction* f;
  const ShapeTable* table;

  void gather(int cell, double inv_h, std::size_t nq, std::vector<double>& vals,
              std::vector<Vec2>& grads) const
  {
    const Space& s = *f->space;
    const int nl = table->n_local;
    double local[9];
    for (int l = 0; l < nl; ++l) local[l] = f->coeff[s.cell_dof(cell, l)];
    for (std::size_t q = 0; q < nq; ++q) {
      double v = 0.0, gx = 0.0, gy = 0.0;
      const double* N = &table->value[q * nl];
      const double* Dx = &table->dx[q * nl];
      const double* Dy = &table->dy[q * nl];
      for (int l = 0; l < nl; ++l) {
        v += local[l] * N[l];
        gx += local[l] * Dx[l];
        gy += local[l] * Dy[l];
      }
      vals[q] = v;
      grads[q] = {gx * inv_h, gy * inv_h};
    }
  }
};

int max_degree(std::initializer_list<const DiscreteFunction*> fs)
{
  int d = 1;
  for (const auto* f : fs) d = std::max(d, f->space->degree());
  return d;
}

void require_same_mesh(std::initializer_list<const DiscreteFunction*> fs)
{
  const Mesh* m = (*fs.begin())->space == nullptr ? nullptr : &(*fs.begin())->space->mesh();
  for (const auto* f : fs)
    DWR_REQUIRE(&f->space->mesh() == m, "functions must live on spaces over the same mesh");
}

const ShapeTable& table_for(int degree, const QuadratureRule&, ShapeTable& t1, ShapeTable& t2)
{
  return degree == 1 ? t1 : t2;
}

} // namespace

int pairing_order(int deg)
{
  return 2 * deg + 3;
}

double residual_apply(const Problem& prob, const DiscreteFunction& u, const DiscreteFunction& w)
{
  require_same_mesh({&u, &w});
  const Mesh& mesh = u.space->mesh();
  const QuadratureRule rule = make_quadrature(pairing_order(max_degree({&u, &w})));
  ShapeTable t1(1, rule), t2(2, rule);
  const std::size_t nq = rule.size();

  FunctionEval eu{&u, &table_for(u.space->degree(), rule, t1, t2)};
  FunctionEval ew{&w, &table_for(w.space->degree(), rule, t1, t2)};
  std::vector<double> uv(nq), wv(nq);
  std::vector<Vec2> ug(nq), wg(nq);

  long double total = 0.0;
  for (int c : mesh.active_cells()) {
    Vec2 corner;
    double h;
    mesh.cell_geometry(c, corner, h);
    const double inv_h = 1.0 / h;
    const double area = h * h;
    eu.gather(c, inv_h, nq, uv, ug);
    ew.gather(c, inv_h, nq, wv, wg);
    double cell_sum = 0.0;
    for (std::size_t q = 0; q < nq; ++q) {
      const Vec2 x{corner.x + h * rule.points[q].x, corner.y + h * rule.points[q].y};
      cell_sum += rule.weights[q] * (prob.flux(ug[q]).dot(wg[q]) - prob.source(x) * wv[q]);
    }
    total += static_cast<long double>(area * cell_sum);
  }
  return static_cast<double>(total);
}

double jacobian_apply(const Problem& prob, const DiscreteFunction& u, const DiscreteFunction& du,
                      const DiscreteFunction& v)
{
  require_same_mesh({&u, &du, &v});
  const Mesh& mesh = u.space->mesh();
  const QuadratureRule rule = make_quadrature(pairing_order(max_degree({&u, &du, &v})));
  ShapeTable t1(1, rule), t2(2, rule);
  const std::size_t nq = rule.size();

  FunctionEval eu{&u, &table_for(u.space->degree(), rule, t1, t2)};
  FunctionEval edu{&du, &table_for(du.space->degree(), rule, t1, t2)};
  FunctionEval ev{&v, &table_for(v.space->degree(), rule, t1, t2)};
  std::vector<double> uv(nq), duv(nq), vv(nq);
  std::vector<Vec2> ug(nq), dug(nq), vg(nq);

  long double total = 0.0;
  for (int c : mesh.active_cells()) {
    Vec2 corner;
    double h;
    mesh.cell_geometry(c, corner, h);
    const double inv_h = 1.0 / h;
    eu.gather(c, inv_h, nq, uv, ug);
    edu.gather(c, inv_h, nq, duv, dug);
    ev.gather(c, inv_h, nq, vv, vg);
    double cell_sum = 0.0;
    for (std::size_t q = 0; q < nq; ++q)
      cell_sum += rule.weights[q] * prob.flux_grad(ug[q], dug[q]).dot(vg[q]);
    total += static_cast<long double>(h * h * cell_sum);
  }
  return static_cast<double>(total);
}

double second_apply(const Problem& prob, const DiscreteFunction& u, const DiscreteFunction& du1,
                    const DiscreteFunction& du2, const DiscreteFunction& v)
{
  require_same_mesh({&u, &du1, &du2, &v});
  const Mesh& mesh = u.space->mesh();
  const QuadratureRule rule = make_quadrature(pairing_order(max_degree({&u, &du1, &du2, &v})));
  ShapeTable t1(1, rule), t2(2, rule);
  const std::size_t nq = rule.size();

  FunctionEval eu{&u, &table_for(u.space->degree(), rule, t1, t2)};
  FunctionEval e1{&du1, &table_for(du1.space->degree(), rule, t1, t2)};
  FunctionEval e2{&du2, &table_for(du2.space->degree(), rule, t1, t2)};
  FunctionEval ev{&v, &table_for(v.space->degree(), rule, t1, t2)};
  std::vector<double> s0(nq), s1(nq), s2(nq), sv(nq);
  std::vector<Vec2> g0(nq), g1(nq), g2(nq), gv(nq);

  long double total = 0.0;
  for (int c : mesh.active_cells()) {
    Vec2 corner;
    double h;
    mesh.cell_geometry(c, corner, h);
    const double inv_h = 1.0 / h;
    eu.gather(c, inv_h, nq, s0, g0);
    e1.gather(c, inv_h, nq, s1, g1);
    e2.gather(c, inv_h, nq, s2, g2);
    ev.gather(c, inv_h, nq, sv, gv);
    double cell_sum = 0.0;
    for (std::size_t q = 0; q < nq; ++q)
      cell_sum += rule.weights[q] * prob.flux_hess(g0[q], g1[q], g2[q]).dot(gv[q]);
    total += static_cast<long double>(h * h * cell_sum);
  }
  return static_cast<double>(total);
}

double third_apply(const Problem& prob, const DiscreteFunction& u, const DiscreteFunction& du1,
                   const DiscreteFunction& du2, const DiscreteFunction& du3,
                   const DiscreteFunction& v)
{
  require_same_mesh({&u, &du1, &du2, &du3, &v});
  const Mesh& mesh = u.space->mesh();
  const QuadratureRule rule =
      make_quadrature(pairing_order(max_degree({&u, &du1, &du2, &du3, &v})));
  ShapeTable t1(1, rule), t2(2, rule);
  const std::size_t nq = rule.size();

  FunctionEval eu{&u, &table_for(u.space->degree(), rule, t1, t2)};
  FunctionEval e1{&du1, &table_for(du1.space->degree(), rule, t1, t2)};
  FunctionEval e2{&du2, &table_for(du2.space->degree(), rule, t1, t2)};
  FunctionEval e3{&du3, &table_for(du3.space->degree(), rule, t1, t2)};
  FunctionEval ev{&v, &table_for(v.space->degree(), rule, t1, t2)};
  std::vector<double> s0(nq), s1(nq), s2(nq), s3(nq), sv(nq);
  std::vector<Vec2> g0(nq), g1(nq), g2(nq), g3(nq), gv(nq);

  long double total = 0.0;
  for (int c : mesh.active_cells()) {
    Vec2 corner;
    double h;
    mesh.cell_geometry(c, corner, h);
    const double inv_h = 1.0 / h;
    eu.gather(c, inv_h, nq, s0, g0);
    e1.gather(c, inv_h, nq, s1, g1);
    e2.gather(c, inv_h, nq, s2, g2);
    e3.gather(c, inv_h, nq, s3, g3);
    ev.gather(c, inv_h, nq, sv, gv);
    double cell_sum = 0.0;
    for (std::size_t q = 0; q < nq; ++q)
      cell_sum += rule.weights[q] * prob.flux_third(g0[q], g1[q], g2[q], g3[q]).dot(gv[q]);
    total += static_cast<long double>(h * h * cell_sum);
  }
  return static_cast<double>(total);
}

std::vector<double> assemble_residual_full(const Problem& prob, const DiscreteFunction& u,
                                           const Space& test)
{
  DWR_REQUIRE(&u.space->mesh() == &test.mesh(), "trial and test spaces on different meshes");
  const Mesh& mesh = test.mesh();
  const QuadratureRule rule =
      make_quadrature(pairing_order(std::max(u.space->degree(), test.degree())));
  ShapeTable t1(1, rule), t2(2, rule);
  const ShapeTable& tt = table_for(test.degree(), rule, t1, t2);
  const std::size_t nq = rule.size();

  FunctionEval eu{&u, &table_for(u.space->degree(), rule, t1, t2)};
  std::vector<double> uv(nq);
  std::vector<Vec2> ug(nq);

  std::vector<double> out(test.n_dofs(), 0.0);
  const int nl = test.n_local();
  for (int c : mesh.active_cells()) {
    Vec2 corner;
    double h;
    mesh.cell_geometry(c, corner, h);
    const double inv_h = 1.0 / h;
    const double area = h * h;
    eu.gather(c, inv_h, nq, uv, ug);
    for (std::size_t q = 0; q < nq; ++q) {
      const Vec2 x{corner.x + h * rule.points[q].x, corner.y + h * rule.points[q].y};
      const Vec2 a = prob.flux(ug[q]);
      const double f = prob.source(x);
      const double jxw = rule.weights[q] * area;
      const double* N = &tt.value[q * nl];
      const double* Dx = &tt.dx[q * nl];
      const double* Dy = &tt.dy[q * nl];
      for (int l = 0; l < nl; ++l) {
        const Vec2 grad{Dx[l] * inv_h, Dy[l] * inv_h};
        out[test.cell_dof(c, l)] += jxw * (a.dot(grad) - f * N[l]);
      }
    }
  }
  return out;
}

std::vector<double> assemble_residual(const Problem& prob, const DiscreteFunction& u,
                                      const Space& test)
{
  return test.condense(assemble_residual_full(prob, u, test));
}

SparseMatrix assemble_jacobian(const Problem& prob, const DiscreteFunction& u, const Space& trial,
                               const Space& test)
{
  DWR_REQUIRE(&trial.mesh() == &test.mesh() && &u.space->mesh() == &test.mesh(),
              "jacobian assembly needs one common mesh");
  const Mesh& mesh = test.mesh();
  const QuadratureRule rule = make_quadrature(
      pairing_order(std::max({u.space->degree(), trial.degree(), test.degree()})));
  ShapeTable t1(1, rule), t2(2, rule);
  const ShapeTable& ttr = table_for(trial.degree(), rule, t1, t2);
  const ShapeTable& tte = table_for(test.degree(), rule, t1, t2);
  const std::size_t nq = rule.size();

  FunctionEval eu{&u, &table_for(u.space->degree(), rule, t1, t2)};
  std::vector<double> uv(nq);
  std::vector<Vec2> ug(nq);

  const int nt = test.n_local();
  const int nr = trial.n_local();

  // Expansion of a dof into (free index, weight) pairs.
  auto expand = [](const Space& s, int dof, std::vector<std::pair<int, double>>& out) {
    out.clear();
    const int fi = s.free_index(dof);
    if (fi >= 0) {
      out.emplace_back(fi, 1.0);
      return;
    }
    const Constraint* c = s.constraints().get(dof);
    for (const auto& [m, w] : c->terms) out.emplace_back(s.free_index(m), w);
  };

  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.n_active()) * nt * nr);
  double K[9][9];
  std::vector<std::pair<int, double>> rows, cols;
  Vec2 atr[9];

  for (int c : mesh.active_cells()) {
    Vec2 corner;
    double h;
    mesh.cell_geometry(c, corner, h);
    const double inv_h = 1.0 / h;
    const double area = h * h;
    eu.gather(c, inv_h, nq, uv, ug);

    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < nr; ++j) K[i][j] = 0.0;

    for (std::size_t q = 0; q < nq; ++q) {
      const double jxw = rule.weights[q] * area;
      for (int j = 0; j < nr; ++j) {
        const Vec2 gr{ttr.dx[q * nr + j] * inv_h, ttr.dy[q * nr + j] * inv_h};
        atr[j] = prob.flux_grad(ug[q], gr);
      }
      for (int i = 0; i < nt; ++i) {
        const Vec2 gt{tte.dx[q * nt + i] * inv_h, tte.dy[q * nt + i] * inv_h};
        for (int j = 0; j < nr; ++j) K[i][j] += jxw * atr[j].dot(gt);
      }
    }

    for (int i = 0; i < nt; ++i) {
      expand(test, test.cell_dof(c, i), rows);
      if (rows.empty()) continue;
      for (int j = 0; j < nr; ++j) {
        const double k = K[i][j];
        if (k == 0.0) continue;
        expand(trial, trial.cell_dof(c, j), cols);
        for (const auto& [ri, rw] : rows)
          for (const auto& [ci, cw] : cols) triplets.push_back({ri, ci, rw * cw * k});
      }
    }
  }
  return SparseMatrix::from_triplets(test.n_free(), trial.n_free(), std::move(triplets));
}

std::vector<double> assemble_unit_load_full(const Space& test)
{
  const Mesh& mesh = test.mesh();
  const QuadratureRule rule = make_quadrature(pairing_order(test.degree()));
  ShapeTable t1(1, rule), t2(2, rule);
  const ShapeTable& tt = table_for(test.degree(), rule, t1, t2);
  const std::size_t nq = rule.size();
  const int nl = test.n_local();

  std::vector<double> out(test.n_dofs(), 0.0);
  for (int c : mesh.active_cells()) {
    const double area = mesh.cell_area(c);
    for (std::size_t q = 0; q < nq; ++q) {
      const double jxw = rule.weights[q] * area;
      for (int l = 0; l < nl; ++l) out[test.cell_dof(c, l)] += jxw * tt.value[q * nl + l];
    }
  }
  return out;
}

double integrate(const DiscreteFunction& u)
{
  const Mesh& mesh = u.space->mesh();
  const QuadratureRule rule = make_quadrature(pairing_order(u.space->degree()));
  ShapeTable t1(1, rule), t2(2, rule);
  const std::size_t nq = rule.size();
  FunctionEval eu{&u, &table_for(u.space->degree(), rule, t1, t2)};
  std::vector<double> uv(nq);
  std::vector<Vec2> ug(nq);

  long double total = 0.0;
  for (int c : mesh.active_cells()) {
    Vec2 corner;
    double h;
    mesh.cell_geometry(c, corner, h);
    eu.gather(c, 1.0 / h, nq, uv, ug);
    double s = 0.0;
    for (std::size_t q = 0; q < nq; ++q) s += rule.weights[q] * uv[q];
    total += static_cast<long double>(h * h * s);
  }
  return static_cast<double>(total);
}

std::vector<Vec2> free_dof_coordinates(const Space& space)
{
  std::vector<Vec2> coords;
  coords.reserve(space.n_free());
  for (int dof : space.free_dofs()) coords.push_back(space.support_point(dof));
  return coords;
}

} // namespace dwr
