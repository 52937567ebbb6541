#pragma once

#include "vech/linalg.hpp"
#include "vech/mesh.hpp"

#include <array>
#include <functional>

namespace vech {

enum class SpaceKind { P1Scalar, P1SymTensor, P2Vector };

/// Degree-of-freedom map. Nodes are the mesh vertices, followed by edge
/// midpoints for P2. Multi-component fields are stored component-major:
/// dof(node, c) = c * num_nodes + node.
struct DofLayout {
  SpaceKind kind = SpaceKind::P1Scalar;
  int components = 1;
  int num_vertices = 0;
  int num_nodes = 0;

  int size() const { return components * num_nodes; }
  int dof(int node, int c = 0) const { return c * num_nodes + node; }
};

DofLayout make_layout(const Mesh& mesh, SpaceKind kind);

/// Geometry of one triangle: area and gradients of the three barycentric
/// coordinates.
struct Element {
  double area = 0.0;
  std::array<Vec2, 3> grad{};
};

Element element(const Mesh& mesh, int t);

/// Symmetric 6-point rule, exact for polynomials of degree 4. Weights sum to one
/// and are to be scaled by the element area.
struct QuadPoint {
  std::array<double, 3> lambda;
  double weight;
};
const std::array<QuadPoint, 6>& quadrature_deg4();

/// Quadratic Lagrange basis: vertex functions first, then the midpoint
/// function of local edge k (opposite vertex k).
std::array<double, 6> p2_values(const std::array<double, 3>& lambda);
std::array<Vec2, 6> p2_gradients(const std::array<double, 3>& lambda, const Element& e);

/// Global P2 node ids of triangle t in local basis order.
std::array<int, 6> p2_nodes(const Mesh& mesh, const EdgeTable& edges, int t);

/// Coordinates of all P2 nodes (vertices then edge midpoints).
std::vector<Vec2> p2_node_coordinates(const Mesh& mesh, const EdgeTable& edges);

/// Nodes of the P2 space lying on the domain boundary.
std::vector<char> p2_boundary_nodes(const Mesh& mesh, const EdgeTable& edges);

struct LumpedMass {
  Vec weights;           // per vertex, area units
  Vec boundary_weights;  // per vertex, length units; zero at interior vertices
};

LumpedMass lumped_mass(const Mesh& mesh);

/// Lumped inner product <a, b>_h.
double lumped_dot(const LumpedMass& lm, const Vec& a, const Vec& b);

Vec nodal_interpolate(const Mesh& mesh, const std::function<double(const Vec2&)>& f);

/// Interpolation of a vector function into the P2 space (component-major).
Vec interpolate_p2(const Mesh& mesh, const EdgeTable& edges,
                   const std::function<Vec2(const Vec2&)>& f);

/// Stiffness with the P1-interpolated coefficient I_h[coeff] under the
/// integral. Throws InvalidState if any nodal coefficient is not positive.
SparseOperator assemble_p1_stiffness(const Mesh& mesh, const Vec& coeff);
SparseOperator assemble_p1_stiffness(const Mesh& mesh, double coeff = 1.0);

/// Consistent P1 mass.
SparseOperator assemble_p1_mass(const Mesh& mesh);

/// Consistent P2 mass for one scalar component.
SparseOperator assemble_p2_mass(const Mesh& mesh, const EdgeTable& edges);

/// Lumped Neumann Laplacian: nodewise -(K q) / weight.
Vec discrete_laplacian(const Mesh& mesh, const Vec& q);
Vec discrete_laplacian(const SparseOperator& stiffness, const LumpedMass& lm, const Vec& q);

/// Exact L2 norm of a P1 field (consistent mass).
double l2_norm_p1(const Mesh& mesh, const Vec& q);

/// Point evaluation in triangle t with barycentric coordinates.
double eval_p1(const Mesh& mesh, const Vec& q, int t, const std::array<double, 3>& lambda,
               int component = 0);
Vec2 eval_p2_vector(const Mesh& mesh, const EdgeTable& edges, const Vec& v, int t,
                    const std::array<double, 3>& lambda);

}  // namespace vech
