#include "vech/fespace.hpp"

#include "vech/errors.hpp"

#include <cmath>

namespace vech {

DofLayout make_layout(const Mesh& mesh, SpaceKind kind) {
  DofLayout l;
  l.kind = kind;
  l.num_vertices = mesh.num_vertices();
  switch (kind) {
    case SpaceKind::P1Scalar:
      l.components = 1;
      l.num_nodes = l.num_vertices;
      break;
    case SpaceKind::P1SymTensor:
      l.components = 3;
      l.num_nodes = l.num_vertices;
      break;
    case SpaceKind::P2Vector:
      l.components = 2;
      l.num_nodes = l.num_vertices + build_edges(mesh).num_edges();
      break;
  }
  return l;
}

Element element(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  const Vec2& a = mesh.vertices[tri[0]];
  const Vec2& b = mesh.vertices[tri[1]];
  const Vec2& c = mesh.vertices[tri[2]];
  const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  Element e;
  e.area = 0.5 * det;
  // gradient of lambda_k is the inward normal of the opposite edge over 2*area
  e.grad[0] = Vec2(b.y() - c.y(), c.x() - b.x()) / det;
  e.grad[1] = Vec2(c.y() - a.y(), a.x() - c.x()) / det;
  e.grad[2] = Vec2(a.y() - b.y(), b.x() - a.x()) / det;
  return e;
}

const std::array<QuadPoint, 6>& quadrature_deg4() {
  static const std::array<QuadPoint, 6> rule = [] {
    const double a1 = 0.44594849091596488632, b1 = 0.10810301816807022736;
    const double w1 = 0.22338158967801146570;
    const double a2 = 0.09157621350977074346, b2 = 0.81684757298045851308;
    const double w2 = 0.10995174365532186764;
    return std::array<QuadPoint, 6>{QuadPoint{{b1, a1, a1}, w1}, QuadPoint{{a1, b1, a1}, w1},
                                     QuadPoint{{a1, a1, b1}, w1}, QuadPoint{{b2, a2, a2}, w2},
                                     QuadPoint{{a2, b2, a2}, w2}, QuadPoint{{a2, a2, b2}, w2}};
  }();
  return rule;
}

std::array<double, 6> p2_values(const std::array<double, 3>& l) {
  return {l[0] * (2 * l[0] - 1), l[1] * (2 * l[1] - 1), l[2] * (2 * l[2] - 1),
          4 * l[1] * l[2],       4 * l[2] * l[0],       4 * l[0] * l[1]};
}

std::array<Vec2, 6> p2_gradients(const std::array<double, 3>& l, const Element& e) {
  const auto& g = e.grad;
  return {(4 * l[0] - 1) * g[0],          (4 * l[1] - 1) * g[1],
          (4 * l[2] - 1) * g[2],          4 * (l[1] * g[2] + l[2] * g[1]),
          4 * (l[2] * g[0] + l[0] * g[2]), 4 * (l[0] * g[1] + l[1] * g[0])};
}

std::array<int, 6> p2_nodes(const Mesh& mesh, const EdgeTable& edges, int t) {
  const auto& tri = mesh.triangles[t];
  const auto& te = edges.tri_edges[t];
  const int nv = mesh.num_vertices();
  return {tri[0], tri[1], tri[2], nv + te[0], nv + te[1], nv + te[2]};
}

std::vector<Vec2> p2_node_coordinates(const Mesh& mesh, const EdgeTable& edges) {
  std::vector<Vec2> x = mesh.vertices;
  for (const auto& e : edges.edges) x.push_back(0.5 * (mesh.vertices[e[0]] + mesh.vertices[e[1]]));
  return x;
}

std::vector<char> p2_boundary_nodes(const Mesh& mesh, const EdgeTable& edges) {
  const int nv = mesh.num_vertices();
  std::vector<char> b(nv + edges.num_edges(), 0);
  for (int e = 0; e < edges.num_edges(); ++e) {
    if (!edges.on_boundary[e]) continue;
    b[edges.edges[e][0]] = 1;
    b[edges.edges[e][1]] = 1;
    b[nv + e] = 1;
  }
  return b;
}

LumpedMass lumped_mass(const Mesh& mesh) {
  LumpedMass lm;
  lm.weights = Vec::Zero(mesh.num_vertices());
  lm.boundary_weights = Vec::Zero(mesh.num_vertices());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double a = mesh.signed_area(t) / 3.0;
    for (int v : mesh.triangles[t]) lm.weights[v] += a;
  }
  for (const auto& e : mesh.boundary_edges) {
    const double len = (mesh.vertices[e[0]] - mesh.vertices[e[1]]).norm();
    lm.boundary_weights[e[0]] += 0.5 * len;
    lm.boundary_weights[e[1]] += 0.5 * len;
  }
  return lm;
}

double lumped_dot(const LumpedMass& lm, const Vec& a, const Vec& b) {
  return (lm.weights.array() * a.array() * b.array()).sum();
}

Vec nodal_interpolate(const Mesh& mesh, const std::function<double(const Vec2&)>& f) {
  Vec q(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) q[v] = f(mesh.vertices[v]);
  return q;
}

Vec interpolate_p2(const Mesh& mesh, const EdgeTable& edges,
                   const std::function<Vec2(const Vec2&)>& f) {
  const auto x = p2_node_coordinates(mesh, edges);
  const int n = static_cast<int>(x.size());
  Vec out(2 * n);
  for (int i = 0; i < n; ++i) {
    const Vec2 y = f(x[i]);
    out[i] = y.x();
    out[n + i] = y.y();
  }
  return out;
}

SparseOperator assemble_p1_stiffness(const Mesh& mesh, const Vec& coeff) {
  if (coeff.size() != mesh.num_vertices()) {
    throw InvalidState("stiffness: coefficient size does not match vertex count");
  }
  for (int v = 0; v < coeff.size(); ++v) {
    if (!(coeff[v] > 0.0)) throw InvalidState("stiffness: coefficient must be positive");
  }
  Triplets trip;
  trip.reserve(9 * mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Element e = element(mesh, t);
    // I_h[c] integrates to the vertex average because the gradients are constant
    const double c = (coeff[tri[0]] + coeff[tri[1]] + coeff[tri[2]]) / 3.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        trip.emplace_back(tri[i], tri[j], c * e.area * e.grad[i].dot(e.grad[j]));
      }
    }
  }
  return from_triplets(mesh.num_vertices(), mesh.num_vertices(), trip);
}

SparseOperator assemble_p1_stiffness(const Mesh& mesh, double coeff) {
  return assemble_p1_stiffness(mesh, Vec::Constant(mesh.num_vertices(), coeff));
}

SparseOperator assemble_p1_mass(const Mesh& mesh) {
  Triplets trip;
  trip.reserve(9 * mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double a = mesh.signed_area(t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], a * (i == j ? 2.0 : 1.0) / 12.0);
    }
  }
  return from_triplets(mesh.num_vertices(), mesh.num_vertices(), trip);
}

SparseOperator assemble_p2_mass(const Mesh& mesh, const EdgeTable& edges) {
  const int n = mesh.num_vertices() + edges.num_edges();
  Triplets trip;
  trip.reserve(36 * mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto nodes = p2_nodes(mesh, edges, t);
    const double a = mesh.signed_area(t);
    double m[6][6] = {};
    for (const auto& q : quadrature_deg4()) {
      const auto phi = p2_values(q.lambda);
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) m[i][j] += q.weight * a * phi[i] * phi[j];
      }
    }
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) trip.emplace_back(nodes[i], nodes[j], m[i][j]);
    }
  }
  return from_triplets(n, n, trip);
}

Vec discrete_laplacian(const SparseOperator& stiffness, const LumpedMass& lm, const Vec& q) {
  return -(stiffness * q).cwiseQuotient(lm.weights);
}

Vec discrete_laplacian(const Mesh& mesh, const Vec& q) {
  return discrete_laplacian(assemble_p1_stiffness(mesh), lumped_mass(mesh), q);
}

double l2_norm_p1(const Mesh& mesh, const Vec& q) {
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double a = q[tri[0]], b = q[tri[1]], c = q[tri[2]];
    s += mesh.signed_area(t) / 6.0 * (a * a + b * b + c * c + a * b + b * c + c * a);
  }
  return std::sqrt(s);
}

double eval_p1(const Mesh& mesh, const Vec& q, int t, const std::array<double, 3>& l,
               int component) {
  const int n = mesh.num_vertices();
  const auto& tri = mesh.triangles[t];
  return l[0] * q[component * n + tri[0]] + l[1] * q[component * n + tri[1]] +
         l[2] * q[component * n + tri[2]];
}

Vec2 eval_p2_vector(const Mesh& mesh, const EdgeTable& edges, const Vec& v, int t,
                    const std::array<double, 3>& l) {
  const int n = mesh.num_vertices() + edges.num_edges();
  const auto nodes = p2_nodes(mesh, edges, t);
  const auto phi = p2_values(l);
  Vec2 out = Vec2::Zero();
  for (int i = 0; i < 6; ++i) {
    out.x() += phi[i] * v[nodes[i]];
    out.y() += phi[i] * v[n + nodes[i]];
  }
  return out;
}

}  // namespace vech
