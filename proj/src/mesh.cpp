#include "vech/mesh.hpp"

#include "vech/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace vech {

bool Box::on_boundary(const Vec2& p, double tol) const {
  const double s = tol * std::max(width(), height());
  return std::abs(p.x() - x0) <= s || std::abs(p.x() - x1) <= s || std::abs(p.y() - y0) <= s ||
         std::abs(p.y() - y1) <= s;
}

double Mesh::signed_area(int t) const {
  const auto& tri = triangles[t];
  const Vec2 e1 = vertices[tri[1]] - vertices[tri[0]];
  const Vec2 e2 = vertices[tri[2]] - vertices[tri[0]];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

double Mesh::diameter(int t) const {
  const auto& tri = triangles[t];
  double d = 0.0;
  for (int k = 0; k < 3; ++k) {
    d = std::max(d, (vertices[tri[k]] - vertices[tri[(k + 1) % 3]]).norm());
  }
  return d;
}

double Mesh::max_angle(int t) const {
  const auto& tri = triangles[t];
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    const Vec2 a = vertices[tri[(k + 1) % 3]] - vertices[tri[k]];
    const Vec2 b = vertices[tri[(k + 2) % 3]] - vertices[tri[k]];
    const double c = std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0);
    worst = std::max(worst, std::acos(c));
  }
  return worst;
}

double Mesh::h_max() const {
  double h = 0.0;
  for (int t = 0; t < num_triangles(); ++t) h = std::max(h, diameter(t));
  return h;
}

double Mesh::h_min() const {
  double h = std::numeric_limits<double>::infinity();
  for (int t = 0; t < num_triangles(); ++t) h = std::min(h, diameter(t));
  return h;
}

bool Mesh::is_conforming() const {
  const EdgeTable et = build_edges(*this);
  for (int e = 0; e < et.num_edges(); ++e) {
    if (!et.on_boundary[e]) continue;
    const Vec2 mid = 0.5 * (vertices[et.edges[e][0]] + vertices[et.edges[e][1]]);
    const bool a = box.on_boundary(vertices[et.edges[e][0]]);
    const bool b = box.on_boundary(vertices[et.edges[e][1]]);
    if (!a || !b || !box.on_boundary(mid)) return false;
  }
  return true;
}

EdgeTable build_edges(const Mesh& mesh) {
  struct Entry {
    int a, b, tri, local;
  };
  std::vector<Entry> entries;
  entries.reserve(3 * mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      int a = tri[(k + 1) % 3];
      int b = tri[(k + 2) % 3];
      if (a > b) std::swap(a, b);
      entries.push_back({a, b, t, k});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& l, const Entry& r) {
    return l.a != r.a ? l.a < r.a : (l.b != r.b ? l.b < r.b : l.tri < r.tri);
  });

  EdgeTable et;
  et.tri_edges.assign(mesh.triangles.size(), {-1, -1, -1});
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i;
    while (j < entries.size() && entries[j].a == entries[i].a && entries[j].b == entries[i].b) ++j;
    if (j - i > 2) throw InvalidState("edge shared by more than two triangles");
    const int e = static_cast<int>(et.edges.size());
    et.edges.push_back({entries[i].a, entries[i].b});
    et.edge_tris.push_back({entries[i].tri, j - i == 2 ? entries[i + 1].tri : -1});
    et.on_boundary.push_back(j - i == 1);
    for (std::size_t k = i; k < j; ++k) et.tri_edges[entries[k].tri][entries[k].local] = e;
    i = j;
  }
  return et;
}

Mesh build_macro_mesh(const Box& box, int n) {
  if (n < 1) throw InvalidArgument("build_macro_mesh: resolution must be at least 1");
  Mesh m;
  m.box = box;
  const double dx = box.width() / n;
  const double dy = box.height() / n;
  auto corner = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) m.vertices.emplace_back(box.x0 + i * dx, box.y0 + j * dy);
  }
  const int c0 = static_cast<int>(m.vertices.size());
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      m.vertices.emplace_back(box.x0 + (i + 0.5) * dx, box.y0 + (j + 0.5) * dy);
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int z = c0 + j * n + i;
      const std::array<int, 4> c{corner(i, j), corner(i + 1, j), corner(i + 1, j + 1),
                                 corner(i, j + 1)};
      for (int k = 0; k < 4; ++k) m.triangles.push_back({z, c[k], c[(k + 1) % 4]});
    }
  }
  m.level.assign(m.triangles.size(), 0);
  m.vertex_key.resize(m.vertices.size());
  for (int v = 0; v < m.num_vertices(); ++v) m.vertex_key[v] = v;
  const EdgeTable et = build_edges(m);
  for (int e = 0; e < et.num_edges(); ++e) {
    if (et.on_boundary[e]) m.boundary_edges.push_back(et.edges[e]);
  }
  return m;
}

std::vector<int> interface_band(const Mesh& mesh, std::span<const double> phi, double band_delta,
                                bool straddle) {
  if (static_cast<int>(phi.size()) != mesh.num_vertices()) {
    throw InvalidState("interface_band: phi size does not match vertex count");
  }
  const double lim = 1.0 - band_delta;
  std::vector<int> out;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    double lo = phi[tri[0]];
    double hi = phi[tri[0]];
    bool hit = false;
    for (int k = 0; k < 3; ++k) {
      const double p = phi[tri[k]];
      hit = hit || std::abs(p) <= lim;
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    if (straddle) hit = hit || (lo <= lim && hi >= -lim);
    if (hit) out.push_back(t);
  }
  return out;
}

int RefinementSpec::target_level() const {
  int ratio = fine_n / coarse_n;
  int k = 0;
  while (ratio > 1) {
    ratio /= 2;
    ++k;
  }
  return 2 * k;
}

void RefinementSpec::validate() const {
  if (coarse_n < 1 || fine_n < coarse_n || fine_n % coarse_n != 0) {
    throw InvalidArgument("refinement: fine_n must be a multiple of coarse_n");
  }
  const int ratio = fine_n / coarse_n;
  if ((ratio & (ratio - 1)) != 0) {
    throw InvalidArgument("refinement: fine_n / coarse_n must be a power of two");
  }
  if (!(band_delta > 0.0 && band_delta < 1.0)) {
    throw InvalidArgument("refinement: band_delta must lie in (0, 1)");
  }
}

bool Transfer::is_identity() const {
  if (static_cast<int>(old_vertex.size()) != old_count) return false;
  for (std::size_t i = 0; i < old_vertex.size(); ++i) {
    if (old_vertex[i] != static_cast<int>(i)) return false;
  }
  return true;
}

Vec Transfer::apply_p1(const Vec& old_values, int components) const {
  const int n_new = static_cast<int>(old_vertex.size());
  const int n_old = static_cast<int>(old_values.size()) / components;
  Vec out(n_new * components);
  for (int c = 0; c < components; ++c) {
    // created vertices always have smaller-id parents, so one ascending pass suffices
    for (int v = 0; v < n_new; ++v) {
      if (old_vertex[v] >= 0) {
        out[c * n_new + v] = old_values[c * n_old + old_vertex[v]];
      } else {
        const auto& p = edge_parent[v];
        out[c * n_new + v] = 0.5 * (out[c * n_new + p[0]] + out[c * n_new + p[1]]);
      }
    }
  }
  return out;
}

std::array<double, 3> barycentric(const Mesh& mesh, int t, const Vec2& p) {
  const auto& tri = mesh.triangles[t];
  const Vec2& a = mesh.vertices[tri[0]];
  const Vec2& b = mesh.vertices[tri[1]];
  const Vec2& c = mesh.vertices[tri[2]];
  const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  const double l1 = ((p.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (p.y() - a.y())) / det;
  const double l2 = ((b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y())) / det;
  return {1.0 - l1 - l2, l1, l2};
}

PointLocator::PointLocator(const Mesh& mesh) : mesh_(mesh) {
  const int nt = mesh.num_triangles();
  const int side = std::max(1, static_cast<int>(std::sqrt(nt / 2.0)));
  nx_ = side;
  ny_ = side;
  buckets_.resize(static_cast<std::size_t>(nx_) * ny_);
  const Box& b = mesh.box;
  for (int t = 0; t < nt; ++t) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (int v : mesh.triangles[t]) {
      xmin = std::min(xmin, mesh.vertices[v].x());
      xmax = std::max(xmax, mesh.vertices[v].x());
      ymin = std::min(ymin, mesh.vertices[v].y());
      ymax = std::max(ymax, mesh.vertices[v].y());
    }
    auto cx = [&](double x) {
      return std::clamp(static_cast<int>((x - b.x0) / b.width() * nx_), 0, nx_ - 1);
    };
    auto cy = [&](double y) {
      return std::clamp(static_cast<int>((y - b.y0) / b.height() * ny_), 0, ny_ - 1);
    };
    for (int j = cy(ymin); j <= cy(ymax); ++j) {
      for (int i = cx(xmin); i <= cx(xmax); ++i) buckets_[j * nx_ + i].push_back(t);
    }
  }
}

std::optional<PointLocator::Hit> PointLocator::locate(const Vec2& p) const {
  const Box& b = mesh_.box;
  const int i = std::clamp(static_cast<int>((p.x() - b.x0) / b.width() * nx_), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>((p.y() - b.y0) / b.height() * ny_), 0, ny_ - 1);
  std::optional<Hit> best;
  double best_min = -1e300;
  for (int t : buckets_[j * nx_ + i]) {
    const auto l = barycentric(mesh_, t, p);
    const double m = std::min({l[0], l[1], l[2]});
    if (m > best_min) {
      best_min = m;
      best = Hit{t, l};
    }
    if (m >= 0.0) break;
  }
  if (!best || best_min < -1e-10) return std::nullopt;
  return best;
}

void write_mesh_vtk(const Mesh& mesh, std::ostream& out) {
  out << "# vtk DataFile Version 3.0\nmesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out.precision(17);
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << " 0\n";
  out << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << mesh.num_triangles() << '\n';
  for (int t = 0; t < mesh.num_triangles(); ++t) out << "5\n";
}

}  // namespace vech
