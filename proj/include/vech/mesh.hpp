#pragma once

#include "vech/linalg.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace vech {

/// Axis-aligned rectangle; the simulations use the square (-5,5)^2.
struct Box {
  double x0 = -5.0;
  double y0 = -5.0;
  double x1 = 5.0;
  double y1 = 5.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  double perimeter() const { return 2.0 * (width() + height()); }
  bool on_boundary(const Vec2& p, double tol = 1e-12) const;
};

/// Conforming triangulation. Triangles are counter-clockwise.
struct Mesh {
  Box box;
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 2>> boundary_edges;
  std::vector<int> level;       // bisection depth per triangle (0 = macro element)
  std::vector<int> vertex_key;  // stable hierarchy id of each vertex

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }

  double signed_area(int t) const;
  double diameter(int t) const;
  /// Largest interior angle in radians.
  double max_angle(int t) const;
  double h_max() const;
  double h_min() const;

  /// Every edge is shared by at most two triangles and edges with a single
  /// neighbour lie on the box boundary (no hanging nodes).
  bool is_conforming() const;
};

/// Edge connectivity derived from a mesh. Local edge k of a triangle is the
/// edge opposite local vertex k.
struct EdgeTable {
  std::vector<std::array<int, 2>> edges;  // endpoints with edges[e][0] < edges[e][1]
  std::vector<std::array<int, 3>> tri_edges;
  std::vector<std::array<int, 2>> edge_tris;  // second entry -1 on the boundary
  std::vector<char> on_boundary;

  int num_edges() const { return static_cast<int>(edges.size()); }
};

EdgeTable build_edges(const Mesh& mesh);

/// Criss-cross grid: n x n squares, each split into four right-isosceles
/// triangles about its centre. Throws InvalidArgument for n < 1.
Mesh build_macro_mesh(const Box& box, int n);

/// Triangles with at least one vertex where |phi| <= 1 - band_delta.
/// With `straddle` set, triangles whose vertex values bracket the band are
/// included too, so the P1 band is detected even when no vertex falls inside.
std::vector<int> interface_band(const Mesh& mesh, std::span<const double> phi,
                                double band_delta, bool straddle = false);

struct RefinementSpec {
  int coarse_n = 16;
  int fine_n = 256;
  double band_delta = 0.075;

  /// Bisection depth at which elements match a uniform fine_n grid.
  int target_level() const;
  void validate() const;
};

/// Old-to-new vertex map produced by an adaptation.
struct Transfer {
  std::vector<int> old_vertex;                 // -1 for vertices created by bisection
  std::vector<std::array<int, 2>> edge_parent;  // endpoints (new ids) of the bisected edge
  int old_count = 0;                            // vertices of the previous mesh

  bool is_identity() const;
  /// Nodal interpolation of a P1 field with `components` blocks of length
  /// num_old_vertices stored component-major.
  Vec apply_p1(const Vec& old_values, int components = 1) const;
};

/// Nested newest-vertex-bisection forest over a criss-cross macro mesh.
/// Owns the refinement history; every adaptation produces a fresh immutable
/// Mesh snapshot.
class MeshHierarchy {
 public:
  MeshHierarchy(const Box& box, int coarse_n);

  std::shared_ptr<const Mesh> mesh() const { return mesh_; }
  int coarse_n() const { return coarse_n_; }

  /// Refines every marked leaf (ids of the current snapshot) and all of its
  /// descendants to the target level, then coarsens bisections whose
  /// children were unmarked for two consecutive calls.
  Transfer refine_to_indicator(std::span<const int> marked, const RefinementSpec& spec);

  /// Repeatedly bisects leaves intersecting the band of `phi` until the band is
  /// covered at the target level, then coarsens as above. New vertex values
  /// of phi come from `exact` when given, otherwise from edge midpoints.
  Transfer adapt_to_band(std::span<const double> phi, const RefinementSpec& spec,
                         const std::function<double(const Vec2&)>& exact = {});

  void save(std::ostream& out) const;
  static MeshHierarchy load(std::istream& in);

 private:
  struct Node {
    std::array<int, 3> v{};  // v[0] newest vertex; refinement edge (v[1], v[2])
    int parent = -1;
    std::array<int, 2> child{-1, -1};
    int level = 0;
    int midpoint = -1;
    int streak = 0;  // consecutive adaptation calls spent unmarked
    bool alive = true;
    bool leaf() const { return child[0] < 0; }
  };

  MeshHierarchy() = default;

  static std::uint64_t edge_key(int a, int b);
  int midpoint_vertex(int a, int b);
  void attach_leaf(int node);
  void detach_leaf(int node);
  void bisect(int node);
  void refine_leaf(int node);
  bool try_coarsen(int midpoint);
  void coarsen_pass();
  void rebuild_indices();
  Transfer snapshot();

  Box box_;
  int coarse_n_ = 1;
  std::vector<Vec2> vpos_;
  std::vector<std::array<int, 2>> vparent_;  // bisected edge of created vertices
  std::vector<char> valive_;
  std::vector<Node> nodes_;
  std::vector<int> roots_;
  std::unordered_map<std::uint64_t, int> split_;                  // edge -> midpoint
  std::unordered_map<std::uint64_t, std::array<int, 2>> edge_leaves_;
  std::map<int, std::vector<int>> bisected_at_;                   // midpoint -> parents
  std::vector<int> created_;
  std::vector<int> leaf_nodes_;  // snapshot triangle -> node
  std::shared_ptr<const Mesh> mesh_;
};

/// Locates points in a mesh through a uniform bucket grid.
class PointLocator {
 public:
  explicit PointLocator(const Mesh& mesh);

  struct Hit {
    int triangle;
    std::array<double, 3> barycentric;
  };
  std::optional<Hit> locate(const Vec2& p) const;

 private:
  const Mesh& mesh_;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

/// Barycentric coordinates of p with respect to triangle t.
std::array<double, 3> barycentric(const Mesh& mesh, int t, const Vec2& p);

/// Writes the mesh as a legacy-VTK ASCII unstructured grid.
void write_mesh_vtk(const Mesh& mesh, std::ostream& out);

}  // namespace vech
