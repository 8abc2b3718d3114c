#include "dwr/space.hpp"

#include <algorithm>
#include <cstdint>

namespace dwr {

namespace {

std::uint64_t face_key(int a, int b)
{
  const std::uint32_t lo = static_cast<std::uint32_t>(std::min(a, b));
  const std::uint32_t hi = static_cast<std::uint32_t>(std::max(a, b));
  return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

// Local lexicographic node -> mesh entity, per degree. Vertices are stored
// counter-clockwise (SW,SE,NE,NW); locals run x-fastest.
constexpr int q1_vertex_of_local[4] = {0, 1, 3, 2};

} // namespace

double lagrange_value(int degree, int i, double x)
{
  if (degree == 1) return i == 0 ? 1.0 - x : x;
  switch (i) {
    case 0: return (2.0 * x - 1.0) * (x - 1.0);
    case 1: return 4.0 * x * (1.0 - x);
    default: return x * (2.0 * x - 1.0);
  }
}

double lagrange_grad(int degree, int i, double x)
{
  if (degree == 1) return i == 0 ? -1.0 : 1.0;
  switch (i) {
    case 0: return 4.0 * x - 3.0;
    case 1: return 4.0 - 8.0 * x;
    default: return 4.0 * x - 1.0;
  }
}

void ConstraintSet::add(int dof, Constraint c)
{
  auto [it, inserted] = map_.insert_or_assign(dof, std::move(c));
  (void)it;
  if (inserted) {
    order_.insert(std::upper_bound(order_.begin(), order_.end(), dof), dof);
  }
}

const Constraint* ConstraintSet::get(int dof) const
{
  auto it = map_.find(dof);
  return it == map_.end() ? nullptr : &it->second;
}

void ConstraintSet::resolve()
{
  for (int pass = 0; pass < 64; ++pass) {
    bool changed = false;
    for (int dof : order_) {
      Constraint& c = map_[dof];
      bool needs_expand = false;
      for (const auto& [m, w] : c.terms) {
        (void)w;
        if (map_.count(m)) {
          needs_expand = true;
          break;
        }
      }
      if (!needs_expand) continue;
      changed = true;

      Constraint out;
      out.inhom = c.inhom;
      for (const auto& [m, w] : c.terms) {
        auto mit = map_.find(m);
        if (mit == map_.end()) {
          out.terms.emplace_back(m, w);
          continue;
        }
        DWR_REQUIRE(m != dof, "self-referential constraint");
        out.inhom += w * mit->second.inhom;
        for (const auto& [mm, ww] : mit->second.terms) out.terms.emplace_back(mm, w * ww);
      }
      std::sort(out.terms.begin(), out.terms.end());
      std::vector<std::pair<int, double>> merged;
      for (const auto& t : out.terms) {
        if (!merged.empty() && merged.back().first == t.first)
          merged.back().second += t.second;
        else
          merged.push_back(t);
      }
      out.terms = std::move(merged);
      c = std::move(out);
    }
    if (!changed) return;
  }
  throw std::logic_error("constraint chains did not resolve");
}

void ConstraintSet::distribute(std::vector<double>& x, bool homogeneous) const
{
  for (int dof : order_) {
    const Constraint& c = map_.at(dof);
    double v = homogeneous ? 0.0 : c.inhom;
    for (const auto& [m, w] : c.terms) v += w * x[m];
    x[dof] = v;
  }
}

Space::Space(const Mesh& mesh, int degree, const DirichletMap& dirichlet)
    : mesh_(&mesh), degree_(degree)
{
  DWR_REQUIRE(degree == 1 || degree == 2, "only degree 1 and 2 spaces are supported");
  build_dofs();
  build_constraints(dirichlet);
}

void Space::build_dofs()
{
  const Mesh& m = *mesh_;
  const int nv = static_cast<int>(m.vertices.size());
  n_dofs_ = nv;
  support_points_.assign(m.vertices.begin(), m.vertices.end());
  cell_dofs_.assign(m.cells.size(), {-1, -1, -1, -1, -1, -1, -1, -1, -1});

  std::vector<int> cell_center_dof;
  if (degree_ == 2) {
    for (int c : m.active_cells())
      for (int f = 0; f < 4; ++f) {
        const auto fv = m.face_vertices(c, f);
        const auto key = face_key(fv[0], fv[1]);
        if (face_dof_.count(key)) continue;
        const int mid = m.split_midpoint(fv[0], fv[1]);
        if (mid >= 0) {
          // Hanging face: the coarse edge dof coincides with the fine-side
          // midpoint vertex and is identified with it.
          face_dof_.emplace(key, mid);
        } else {
          face_dof_.emplace(key, n_dofs_++);
          support_points_.push_back((m.vertices[fv[0]] + m.vertices[fv[1]]) * 0.5);
        }
      }
    cell_center_dof.assign(m.cells.size(), -1);
    for (int c : m.active_cells()) {
      cell_center_dof[c] = n_dofs_++;
      Vec2 corner;
      double h;
      m.cell_geometry(c, corner, h);
      support_points_.push_back({corner.x + 0.5 * h, corner.y + 0.5 * h});
    }
  }

  for (int c : m.active_cells()) {
    auto& dofs = cell_dofs_[c];
    const auto& cv = m.cells[c].v;
    if (degree_ == 1) {
      for (int l = 0; l < 4; ++l) dofs[l] = cv[q1_vertex_of_local[l]];
    } else {
      dofs[0] = cv[0];
      dofs[2] = cv[1];
      dofs[8] = cv[2];
      dofs[6] = cv[3];
      auto fdof = [&](int f) {
        const auto fv = m.face_vertices(c, f);
        return face_dof_.at(face_key(fv[0], fv[1]));
      };
      dofs[1] = fdof(0);
      dofs[5] = fdof(1);
      dofs[7] = fdof(2);
      dofs[3] = fdof(3);
      dofs[4] = cell_center_dof[c];
    }
  }
}

void Space::build_constraints(const DirichletMap& dirichlet)
{
  const Mesh& m = *mesh_;

  const auto known = m.boundary_ids();
  for (const auto& [id, fn] : dirichlet) {
    (void)fn;
    if (std::find(known.begin(), known.end(), id) == known.end())
      throw ConfigError("dirichlet map references unknown boundary id " + std::to_string(id));
  }

  for (const auto& hv : m.hanging_vertices()) {
    if (degree_ == 1) {
      Constraint c;
      c.terms = {{hv.end_a, 0.5}, {hv.end_b, 0.5}};
      constraints_.add(hv.vertex, std::move(c));
    } else {
      // Fine-side edge dofs interpolate the coarse edge's quadratic trace;
      // the midpoint vertex itself is the (free) coarse edge dof.
      const int q1 = face_dof_.at(face_key(hv.end_a, hv.vertex));
      const int q2 = face_dof_.at(face_key(hv.vertex, hv.end_b));
      Constraint c1;
      c1.terms = {{hv.end_a, 0.375}, {hv.vertex, 0.75}, {hv.end_b, -0.125}};
      constraints_.add(q1, std::move(c1));
      Constraint c2;
      c2.terms = {{hv.end_a, -0.125}, {hv.vertex, 0.75}, {hv.end_b, 0.375}};
      constraints_.add(q2, std::move(c2));
    }
  }

  for (int c : m.active_cells())
    for (int f = 0; f < 4; ++f) {
      if (!m.is_boundary_face(c, f)) continue;
      const int id = m.boundary_face_id(c, f);
      auto it = dirichlet.find(id);
      if (it == dirichlet.end()) continue;
      const auto fv = m.face_vertices(c, f);
      std::vector<int> dofs = {fv[0], fv[1]};
      if (degree_ == 2) dofs.push_back(face_dof_.at(face_key(fv[0], fv[1])));
      for (int dof : dofs) {
        Constraint bc;
        bc.inhom = it->second(support_points_[dof]);
        constraints_.add(dof, std::move(bc));
      }
    }

  constraints_.resolve();

  free_index_.assign(n_dofs_, -1);
  for (int dof = 0; dof < n_dofs_; ++dof) {
    if (constraints_.is_constrained(dof)) continue;
    free_index_[dof] = static_cast<int>(free_dofs_.size());
    free_dofs_.push_back(dof);
  }
}

std::vector<double> Space::condense(const std::vector<double>& full) const
{
  std::vector<double> out(free_dofs_.size(), 0.0);
  for (int dof = 0; dof < n_dofs_; ++dof) {
    const int fi = free_index_[dof];
    if (fi >= 0) out[fi] += full[dof];
  }
  for (int slave : constraints_.constrained_dofs()) {
    const Constraint* c = constraints_.get(slave);
    for (const auto& [m, w] : c->terms) out[free_index_[m]] += w * full[slave];
  }
  return out;
}

void DiscreteFunction::evaluate(int cell, Vec2 ref, double& value, Vec2& gradient) const
{
  const Space& s = *space;
  const int deg = s.degree();
  const int n1 = deg + 1;
  double lx[3], ly[3], dx[3], dy[3];
  for (int i = 0; i < n1; ++i) {
    lx[i] = lagrange_value(deg, i, ref.x);
    ly[i] = lagrange_value(deg, i, ref.y);
    dx[i] = lagrange_grad(deg, i, ref.x);
    dy[i] = lagrange_grad(deg, i, ref.y);
  }
  Vec2 corner;
  double h;
  s.mesh().cell_geometry(cell, corner, h);

  value = 0.0;
  double gx = 0.0, gy = 0.0;
  for (int j = 0; j < n1; ++j)
    for (int i = 0; i < n1; ++i) {
      const double c = coeff[s.cell_dof(cell, j * n1 + i)];
      value += c * lx[i] * ly[j];
      gx += c * dx[i] * ly[j];
      gy += c * lx[i] * dy[j];
    }
  gradient = {gx / h, gy / h};
}

double DiscreteFunction::value_at(int cell, Vec2 ref) const
{
  double v;
  Vec2 g;
  evaluate(cell, ref, v, g);
  return v;
}

namespace {
void require_same_space(const DiscreteFunction& a, const DiscreteFunction& b)
{
  DWR_REQUIRE(a.space == b.space, "operands live on different spaces");
}
} // namespace

DiscreteFunction operator+(const DiscreteFunction& a, const DiscreteFunction& b)
{
  require_same_space(a, b);
  DiscreteFunction r = a;
  for (std::size_t i = 0; i < r.coeff.size(); ++i) r.coeff[i] += b.coeff[i];
  return r;
}

DiscreteFunction operator-(const DiscreteFunction& a, const DiscreteFunction& b)
{
  require_same_space(a, b);
  DiscreteFunction r = a;
  for (std::size_t i = 0; i < r.coeff.size(); ++i) r.coeff[i] -= b.coeff[i];
  return r;
}

DiscreteFunction operator*(double s, const DiscreteFunction& a)
{
  DiscreteFunction r = a;
  for (auto& c : r.coeff) c *= s;
  return r;
}

DiscreteFunction nodal_interpolate(const Space& space, const std::function<double(Vec2)>& g)
{
  DiscreteFunction f(space);
  for (int dof = 0; dof < space.n_dofs(); ++dof) f.coeff[dof] = g(space.support_point(dof));
  f.distribute();
  return f;
}

DiscreteFunction embed(const DiscreteFunction& f, const Space& enriched)
{
  DWR_REQUIRE(f.space->degree() == 1 && enriched.degree() == 2, "embed maps degree 1 into degree 2");
  DWR_REQUIRE(&f.space->mesh() == &enriched.mesh(), "embed requires same-mesh spaces");

  DiscreteFunction src = f;
  src.distribute();
  DiscreteFunction out(enriched);
  for (int c : enriched.mesh().active_cells())
    for (int l = 0; l < 9; ++l) {
      const Vec2 ref{0.5 * (l % 3), 0.5 * (l / 3)};
      out.coeff[enriched.cell_dof(c, l)] = src.value_at(c, ref);
    }
  out.distribute();
  return out;
}

DiscreteFunction interpolate_enriched(const DiscreteFunction& f, const Space& enriched)
{
  DWR_REQUIRE(f.space->degree() == 1 && enriched.degree() == 2,
              "recovery maps degree 1 into degree 2");
  DWR_REQUIRE(&f.space->mesh() == &enriched.mesh(), "recovery requires same-mesh spaces");
  const Mesh& m = enriched.mesh();

  DiscreteFunction src = f;
  src.distribute();
  DiscreteFunction out(enriched);

  // Quadrant of a child within its parent, by child index.
  constexpr int quadrant_x[4] = {0, 1, 1, 0};
  constexpr int quadrant_y[4] = {0, 0, 1, 1};

  for (int c : m.active_cells()) {
    const auto nodes = m.patch_nodes_of(c);
    double w[9];
    for (int l = 0; l < 9; ++l) w[l] = src.coeff[nodes[l]];

    const int k = m.cells[c].child_index;
    for (int l = 0; l < 9; ++l) {
      const double px = 0.5 * quadrant_x[k] + 0.25 * (l % 3);
      const double py = 0.5 * quadrant_y[k] + 0.25 * (l / 3);
      double v = 0.0;
      for (int b = 0; b < 3; ++b)
        for (int a = 0; a < 3; ++a)
          v += w[b * 3 + a] * lagrange_value(2, a, px) * lagrange_value(2, b, py);
      out.coeff[enriched.cell_dof(c, l)] = v;
    }
  }
  out.distribute();
  return out;
}

DiscreteFunction transfer_to_refined(const DiscreteFunction& f, const Space& refined_space)
{
  DWR_REQUIRE(f.space->degree() == 1 && refined_space.degree() == 1,
              "nodal transfer is defined for degree-1 functions");
  const Mesh& coarse = f.space->mesh();
  const Mesh& fine = refined_space.mesh();
  const int old_nv = static_cast<int>(coarse.vertices.size());
  DWR_REQUIRE(static_cast<int>(fine.vertices.size()) >= old_nv,
              "target mesh is not a refinement of the source mesh");

  DiscreteFunction src = f;
  src.distribute();
  DiscreteFunction out(refined_space);
  const int new_nv = static_cast<int>(fine.vertices.size());
  for (int v = 0; v < new_nv; ++v) {
    if (v < old_nv) {
      out.coeff[v] = src.coeff[v];
      continue;
    }
    const auto& origin = fine.vertex_origin[v];
    if (origin.kind == VertexOrigin::face_midpoint)
      out.coeff[v] = 0.5 * (out.coeff[origin.src[0]] + out.coeff[origin.src[1]]);
    else if (origin.kind == VertexOrigin::cell_center_point)
      out.coeff[v] = 0.25 * (out.coeff[origin.src[0]] + out.coeff[origin.src[1]] +
                             out.coeff[origin.src[2]] + out.coeff[origin.src[3]]);
    else
      throw std::logic_error("new vertex without refinement origin");
  }
  out.distribute();
  return out;
}

} // namespace dwr
