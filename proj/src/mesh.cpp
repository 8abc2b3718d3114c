#include "dwr/mesh.hpp"

#include <algorithm>
#include <ostream>
#include <set>

namespace dwr {

namespace {

// Child c of a cell occupies the quadrant containing parent corner c.
// Face f of child k either lies inside the parent (shared with a sibling)
// or on the parent's own face f.
constexpr int sibling_across[4][4] = {
    // face:  0   1   2   3
    /*SW*/ {-1, 1, 3, -1},
    /*SE*/ {-1, -1, 2, 0},
    /*NE*/ {1, -1, -1, 3},
    /*NW*/ {0, 2, -1, -1},
};

// Mirror child index across a face: which child of the neighbor touches
// face f of the parent.
constexpr int mirror_child[4][4] = {
    // child:        0  1  2  3
    /*face 0 (S)*/ {3, 2, -1, -1},
    /*face 1 (E)*/ {-1, 0, 3, -1},
    /*face 2 (N)*/ {-1, -1, 1, 0},
    /*face 3 (W)*/ {1, -1, -1, 2},
};

} // namespace

std::uint64_t Mesh::face_key(int a, int b)
{
  const std::uint32_t lo = static_cast<std::uint32_t>(std::min(a, b));
  const std::uint32_t hi = static_cast<std::uint32_t>(std::max(a, b));
  return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

void Mesh::add_owner(int a, int b, int c)
{
  auto [it, inserted] = owners_.try_emplace(face_key(a, b), std::array<int, 2>{-1, -1});
  (void)inserted;
  auto& slots = it->second;
  if (slots[0] == c || slots[1] == c) return;
  if (slots[0] < 0)
    slots[0] = c;
  else {
    DWR_REQUIRE(slots[1] < 0, "face owned by more than two cells");
    slots[1] = c;
  }
}

void Mesh::remove_owner(int a, int b, int c)
{
  auto it = owners_.find(face_key(a, b));
  if (it == owners_.end()) return;
  auto& slots = it->second;
  if (slots[0] == c) slots[0] = slots[1];
  else if (slots[1] != c) return;
  slots[1] = -1;
  if (slots[0] < 0) owners_.erase(it);
}

int Mesh::other_owner(int a, int b, int c) const
{
  auto it = owners_.find(face_key(a, b));
  if (it == owners_.end()) return -1;
  if (it->second[0] != c && it->second[0] >= 0) return it->second[0];
  if (it->second[1] != c && it->second[1] >= 0) return it->second[1];
  return -1;
}

int Mesh::split_midpoint(int a, int b) const
{
  auto it = midpoint_.find(face_key(a, b));
  return it == midpoint_.end() ? -1 : it->second;
}

int Mesh::get_or_create_midpoint(int a, int b)
{
  const auto key = face_key(a, b);
  auto it = midpoint_.find(key);
  if (it != midpoint_.end()) return it->second;

  const int id = static_cast<int>(vertices.size());
  vertices.push_back((vertices[a] + vertices[b]) * 0.5);
  VertexOrigin origin;
  origin.kind = VertexOrigin::face_midpoint;
  origin.src = {a, b, -1, -1};
  vertex_origin.push_back(origin);
  midpoint_.emplace(key, id);

  auto bit = boundary_id_.find(key);
  if (bit != boundary_id_.end()) {
    boundary_id_[face_key(a, id)] = bit->second;
    boundary_id_[face_key(id, b)] = bit->second;
  }
  return id;
}

void Mesh::split_cell(int c)
{
  DWR_REQUIRE(cells[c].active(), "split of non-active cell");
  const auto cv = cells[c].v;

  int mid[4];
  for (int f = 0; f < 4; ++f) mid[f] = get_or_create_midpoint(cv[f], cv[(f + 1) % 4]);

  const int center = static_cast<int>(vertices.size());
  vertices.push_back((vertices[cv[0]] + vertices[cv[1]] + vertices[cv[2]] + vertices[cv[3]]) * 0.25);
  VertexOrigin origin;
  origin.kind = VertexOrigin::cell_center_point;
  origin.src = {cv[0], cv[1], cv[2], cv[3]};
  vertex_origin.push_back(origin);

  const std::array<std::array<int, 4>, 4> child_v = {{
      {cv[0], mid[0], center, mid[3]},
      {mid[0], cv[1], mid[1], center},
      {center, mid[1], cv[2], mid[2]},
      {mid[3], center, mid[2], cv[3]},
  }};

  for (int f = 0; f < 4; ++f) remove_owner(cv[f], cv[(f + 1) % 4], c);

  const int base = static_cast<int>(cells.size());
  for (int k = 0; k < 4; ++k) {
    Cell child;
    child.v = child_v[k];
    child.level = cells[c].level + 1;
    child.parent = c;
    child.child_index = k;
    cells.push_back(child);
    cells[c].children[k] = base + k;
    for (int f = 0; f < 4; ++f) add_owner(child_v[k][f], child_v[k][(f + 1) % 4], base + k);
  }
}

void Mesh::split_with_closure(int c)
{
  if (!cells[c].active()) return;
  // Coarser face neighbors must be refined first to keep 1-irregularity.
  for (int f = 0; f < 4; ++f) {
    const int n = coarser_neighbor(c, f);
    if (n >= 0) split_with_closure(n);
  }
  split_cell(c);
}

void Mesh::rebuild_active()
{
  active_.clear();
  for (int c = 0; c < static_cast<int>(cells.size()); ++c)
    if (cells[c].active()) active_.push_back(c);
}

Mesh Mesh::build_initial(const DomainSpec& spec, int macro_subdivisions)
{
  DWR_REQUIRE(macro_subdivisions >= 1, "macro_subdivisions must be positive");
  const int n = macro_subdivisions;
  if (spec.kind == DomainKind::slit_square && n % 2 != 0)
    throw ConfigError("slit-square needs an even number of macro subdivisions "
                      "so the slit lies on mesh lines");

  Mesh m;
  m.domain = spec;

  const double x0 = spec.kind == DomainKind::unit_square ? 0.0 : -1.0;
  const double x1 = 1.0;
  const double h = (x1 - x0) / n;

  auto coord = [&](int i) {
    if (spec.kind == DomainKind::slit_square && i == n / 2) return 0.0;
    return x0 + i * h;
  };

  auto gid = [&](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      m.vertices.emplace_back(coord(i), coord(j));
      m.vertex_origin.push_back({});
    }

  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Cell cell;
      cell.v = {gid(i, j), gid(i + 1, j), gid(i + 1, j + 1), gid(i, j + 1)};
      cell.level = 0;
      m.cells.push_back(cell);
    }

  if (spec.kind == DomainKind::slit_square) {
    // Duplicate the slit vertices (x=0, -1 <= y < 0). Cells right of the
    // slit get the copies; the slit tip (0,0) stays shared.
    for (int j = 0; j < n / 2; ++j) {
      const int v = gid(n / 2, j);
      const int dup = static_cast<int>(m.vertices.size());
      m.vertices.push_back(m.vertices[v]);
      m.vertex_origin.push_back({});
      for (auto& cell : m.cells) {
        const double cx = (m.vertices[cell.v[0]].x + m.vertices[cell.v[2]].x) * 0.5;
        if (cx <= 0.0) continue;
        for (int k = 0; k < 4; ++k)
          if (cell.v[k] == v) cell.v[k] = dup;
      }
    }
  }

  for (int c = 0; c < static_cast<int>(m.cells.size()); ++c)
    for (int f = 0; f < 4; ++f) {
      const auto fv = m.face_vertices(c, f);
      m.add_owner(fv[0], fv[1], c);
    }

  // Boundary labels: every single-owner macro face is boundary.
  for (int c = 0; c < static_cast<int>(m.cells.size()); ++c)
    for (int f = 0; f < 4; ++f) {
      const auto fv = m.face_vertices(c, f);
      if (m.other_owner(fv[0], fv[1], c) >= 0) continue;
      int id = boundary_dirichlet;
      if (spec.kind == DomainKind::slit_square) {
        const Vec2 pa = m.vertices[fv[0]];
        const Vec2 pb = m.vertices[fv[1]];
        const bool on_slit = pa.x == 0.0 && pb.x == 0.0 && pa.y <= 0.0 && pb.y <= 0.0;
        if (on_slit) {
          const double cx = (m.vertices[m.cells[c].v[0]].x + m.vertices[m.cells[c].v[2]].x) * 0.5;
          id = cx < 0.0 ? boundary_neumann : boundary_dirichlet;
        }
      }
      m.boundary_id_[face_key(fv[0], fv[1])] = id;
    }

  // One uniform refinement so the active mesh is patch-covered.
  const int n_macro = static_cast<int>(m.cells.size());
  for (int c = 0; c < n_macro; ++c) m.split_cell(c);
  m.rebuild_active();
  return m;
}

Mesh Mesh::refined(const std::vector<int>& marked) const
{
  Mesh m = *this;
  std::set<int> sorted(marked.begin(), marked.end());
  for (int c : sorted) {
    DWR_REQUIRE(c >= 0 && c < static_cast<int>(m.cells.size()), "refine: cell id out of range");
    DWR_REQUIRE(cells[c].active(), "refine: marked cell is not active");
  }
  for (int c : sorted) m.split_with_closure(c);
  m.rebuild_active();
  return m;
}

void Mesh::cell_geometry(int c, Vec2& corner, double& h) const
{
  corner = vertices[cells[c].v[0]];
  h = vertices[cells[c].v[1]].x - corner.x;
}

double Mesh::cell_area(int c) const
{
  Vec2 corner;
  double h;
  cell_geometry(c, corner, h);
  return h * h;
}

int Mesh::same_level_neighbor(int c, int f) const
{
  const auto fv = face_vertices(c, f);
  const int n = other_owner(fv[0], fv[1], c);
  if (n >= 0 && cells[n].active()) return n;
  return -1;
}

int Mesh::coarser_neighbor(int c, int f) const
{
  const int p = cells[c].parent;
  if (p < 0) return -1;
  const int k = cells[c].child_index;
  if (sibling_across[k][f] >= 0) return -1; // internal face
  const auto pv = cells[p].v;
  const auto key_a = pv[f];
  const auto key_b = pv[(f + 1) % 4];
  auto it = owners_.find(face_key(key_a, key_b));
  if (it == owners_.end()) return -1;
  for (int cand : it->second)
    if (cand >= 0 && cand != p && cells[cand].active()) return cand;
  return -1;
}

std::array<int, 2> Mesh::finer_neighbors(int c, int f) const
{
  const auto fv = face_vertices(c, f);
  const int mid = split_midpoint(fv[0], fv[1]);
  std::array<int, 2> result{-1, -1};
  if (mid < 0) return result;
  result[0] = other_owner(fv[0], mid, c);
  result[1] = other_owner(mid, fv[1], c);
  if (result[0] >= 0 && !cells[result[0]].active()) result[0] = -1;
  if (result[1] >= 0 && !cells[result[1]].active()) result[1] = -1;
  return result;
}

bool Mesh::is_boundary_face(int c, int f) const
{
  const auto fv = face_vertices(c, f);
  return boundary_id_.count(face_key(fv[0], fv[1])) > 0 && other_owner(fv[0], fv[1], c) < 0;
}

int Mesh::boundary_face_id(int c, int f) const
{
  const auto fv = face_vertices(c, f);
  auto it = boundary_id_.find(face_key(fv[0], fv[1]));
  DWR_REQUIRE(it != boundary_id_.end(), "not a boundary face");
  return it->second;
}

std::vector<HangingVertex> Mesh::hanging_vertices() const
{
  std::vector<HangingVertex> result;
  for (int c : active_) {
    for (int f = 0; f < 4; ++f) {
      const auto fv = face_vertices(c, f);
      const int mid = split_midpoint(fv[0], fv[1]);
      if (mid < 0) continue;
      const auto fine = finer_neighbors(c, f);
      if (fine[0] < 0 && fine[1] < 0) continue;
      result.push_back({mid, c, f, fv[0], fv[1]});
    }
  }
  return result;
}

std::array<int, 9> Mesh::patch_nodes_of(int c) const
{
  const int p = cells[c].parent;
  DWR_REQUIRE(p >= 0, "active cell without parent: mesh is not patch-covered");
  const auto& ch = cells[p].children;
  const auto& sw = cells[ch[0]].v;
  const auto& se = cells[ch[1]].v;
  const auto& ne = cells[ch[2]].v;
  const auto& nw = cells[ch[3]].v;
  return {sw[0], sw[1], se[1], sw[3], sw[2], se[2], nw[3], nw[2], ne[2]};
}

std::vector<int> Mesh::boundary_ids() const
{
  std::set<int> ids;
  for (const auto& [key, id] : boundary_id_) {
    (void)key;
    ids.insert(id);
  }
  return std::vector<int>(ids.begin(), ids.end());
}

void Mesh::dump(std::ostream& os) const
{
  for (const auto& v : vertices) os << "v " << v.x << ' ' << v.y << '\n';
  for (int c : active_) {
    const auto& cell = cells[c];
    os << "c " << cell.v[0] << ' ' << cell.v[1] << ' ' << cell.v[2] << ' ' << cell.v[3] << ' '
       << cell.level << '\n';
  }
  for (int c : active_)
    for (int f = 0; f < 4; ++f)
      if (is_boundary_face(c, f)) os << "b " << c << ' ' << f << ' ' << boundary_face_id(c, f) << '\n';
}

void Mesh::check_one_irregular() const
{
  for (int c : active_)
    for (int f = 0; f < 4; ++f) {
      const auto fine = finer_neighbors(c, f);
      for (int n : fine) {
        if (n < 0) continue;
        DWR_REQUIRE(cells[n].level == cells[c].level + 1, "finer neighbor more than one level off");
        // A finer neighbor's own face towards us must not be split again.
        const int back = cells[n].level;
        (void)back;
      }
      const auto fv = face_vertices(c, f);
      const int mid = split_midpoint(fv[0], fv[1]);
      if (mid >= 0) {
        // Neither half-face may be split while c is still active.
        DWR_REQUIRE(split_midpoint(fv[0], mid) < 0 && split_midpoint(mid, fv[1]) < 0,
                    "level jump of two across a face");
      }
    }
}

} // namespace dwr
