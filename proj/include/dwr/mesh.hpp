#ifndef DWR_MESH_HPP
#define DWR_MESH_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "dwr/common.hpp"

namespace dwr {

enum class DomainKind { unit_square, slit_square };

/// Domain selection plus the rule mapping boundary faces to ids.
/// For the slit square, the outer boundary and the right side of the slit
/// carry `boundary_dirichlet`, the left side of the slit `boundary_neumann`.
struct DomainSpec {
  DomainKind kind = DomainKind::unit_square;
};

inline constexpr int boundary_dirichlet = 0;
inline constexpr int boundary_neumann = 1;

/// How a vertex came into existence. Used for exact nodal transfer of
/// coefficient vectors from a mesh to one of its refinements.
struct VertexOrigin {
  enum Kind : std::uint8_t { initial, face_midpoint, cell_center_point };
  Kind kind = initial;
  std::array<int, 4> src{-1, -1, -1, -1}; // endpoints (face) or corners (center)
};

/// Quadrilateral cell. Vertices counter-clockwise starting at the lower-left
/// corner; face f runs from vertex f to vertex (f+1)%4.
struct Cell {
  std::array<int, 4> v{-1, -1, -1, -1};
  int level = 0;
  int parent = -1;
  int child_index = -1;
  std::array<int, 4> children{-1, -1, -1, -1};

  bool active() const { return children[0] < 0; }
};

struct HangingVertex {
  int vertex;     // the midpoint vertex carried by the fine side
  int cell;       // the coarse active cell whose face it sits on
  int face;       // local face index of that cell
  int end_a;      // coarse face endpoints
  int end_b;
};

/// Hierarchical quadrilateral mesh with 1-irregular hanging nodes.
///
/// The active mesh is always a union of 2x2 sibling patches: the initial
/// mesh is one uniform refinement of a macro grid and refinement replaces
/// an active cell by its four children, so every active cell has a parent.
/// A topological slit is realized by duplicated vertices along the slit
/// line; cells left and right of the slit reference different copies.
class Mesh {
public:
  std::vector<Vec2> vertices;
  std::vector<Cell> cells;
  std::vector<VertexOrigin> vertex_origin;
  DomainSpec domain;

  static Mesh build_initial(const DomainSpec& spec, int macro_subdivisions);

  /// New mesh with the marked active cells replaced by their children plus
  /// whatever closure refinement is needed to keep 1-irregularity. The result
  /// is independent of the iteration order of `marked`.
  Mesh refined(const std::vector<int>& marked) const;

  const std::vector<int>& active_cells() const { return active_; }
  int n_active() const { return static_cast<int>(active_.size()); }

  bool is_active(int c) const { return cells[c].active(); }

  /// Lower-left corner and edge length of a (square) cell.
  void cell_geometry(int c, Vec2& corner, double& h) const;
  double cell_area(int c) const;

  std::array<int, 2> face_vertices(int c, int f) const
  {
    return {cells[c].v[f], cells[c].v[(f + 1) % 4]};
  }

  /// Active neighbor of the same level across face f, or -1.
  int same_level_neighbor(int c, int f) const;
  /// Active neighbor one level coarser across face f, or -1.
  int coarser_neighbor(int c, int f) const;
  /// The two active neighbors one level finer across face f; {-1,-1} if none.
  std::array<int, 2> finer_neighbors(int c, int f) const;
  /// True if face f of active cell c lies on the domain boundary.
  bool is_boundary_face(int c, int f) const;
  /// Boundary id of face f of cell c; requires is_boundary_face.
  int boundary_face_id(int c, int f) const;

  /// Midpoint vertex of the face with endpoints (a,b), or -1 if never split.
  int split_midpoint(int a, int b) const;

  std::vector<HangingVertex> hanging_vertices() const;

  /// Vertex ids of the 3x3 patch-node grid of the patch rooted at the parent
  /// of active cell c, in lexicographic (x,y) order.
  std::array<int, 9> patch_nodes_of(int c) const;

  /// Boundary ids present in the mesh.
  std::vector<int> boundary_ids() const;

  /// Plain-text dump: `v x y`, `c v0 v1 v2 v3 level`, `b cell face id`.
  void dump(std::ostream& os) const;

  void check_one_irregular() const; // throws on violation

private:
  static std::uint64_t face_key(int a, int b);

  std::vector<int> active_;
  std::unordered_map<std::uint64_t, int> midpoint_;              // split registry
  std::unordered_map<std::uint64_t, int> boundary_id_;           // face label
  std::unordered_map<std::uint64_t, std::array<int, 2>> owners_; // active owners

  void add_owner(int a, int b, int c);
  void remove_owner(int a, int b, int c);
  int other_owner(int a, int b, int c) const;

  int get_or_create_midpoint(int a, int b);
  void split_cell(int c);
  void split_with_closure(int c);
  void rebuild_active();

  friend class MeshTestAccess;
};

} // namespace dwr

#endif
