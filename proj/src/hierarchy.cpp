#include "vech/detail/binary.hpp"
#include "vech/errors.hpp"
#include "vech/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace vech {

namespace {

constexpr std::uint32_t kHierarchyMagic = 0x48524548;  // "HERH"

}  // namespace

std::uint64_t MeshHierarchy::edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

MeshHierarchy::MeshHierarchy(const Box& box, int coarse_n) : box_(box), coarse_n_(coarse_n) {
  const Mesh macro = build_macro_mesh(box, coarse_n);
  vpos_ = macro.vertices;
  vparent_.assign(vpos_.size(), {-1, -1});
  valive_.assign(vpos_.size(), 1);
  for (const auto& tri : macro.triangles) {
    Node n;
    n.v = tri;
    roots_.push_back(static_cast<int>(nodes_.size()));
    nodes_.push_back(n);
  }
  for (int r : roots_) attach_leaf(r);
  snapshot();
}

int MeshHierarchy::midpoint_vertex(int a, int b) {
  const auto key = edge_key(a, b);
  if (auto it = split_.find(key); it != split_.end()) return it->second;
  const int id = static_cast<int>(vpos_.size());
  vpos_.push_back(0.5 * (vpos_[a] + vpos_[b]));
  vparent_.push_back({std::min(a, b), std::max(a, b)});
  valive_.push_back(1);
  split_[key] = id;
  created_.push_back(id);
  return id;
}

void MeshHierarchy::attach_leaf(int node) {
  const auto& v = nodes_[node].v;
  for (int k = 0; k < 3; ++k) {
    auto [it, fresh] = edge_leaves_.try_emplace(edge_key(v[(k + 1) % 3], v[(k + 2) % 3]),
                                                std::array<int, 2>{-1, -1});
    auto& slot = it->second;
    if (slot[0] < 0) {
      slot[0] = node;
    } else if (slot[1] < 0) {
      slot[1] = node;
    } else {
      throw InvalidState("hierarchy: edge shared by more than two leaves");
    }
  }
}

void MeshHierarchy::detach_leaf(int node) {
  const auto& v = nodes_[node].v;
  for (int k = 0; k < 3; ++k) {
    auto it = edge_leaves_.find(edge_key(v[(k + 1) % 3], v[(k + 2) % 3]));
    if (it == edge_leaves_.end()) continue;
    auto& slot = it->second;
    if (slot[0] == node) slot[0] = -1;
    if (slot[1] == node) slot[1] = -1;
    if (slot[0] < 0 && slot[1] < 0) edge_leaves_.erase(it);
  }
}

void MeshHierarchy::bisect(int node) {
  const auto [a, b, c] = nodes_[node].v;
  const int m = midpoint_vertex(b, c);
  detach_leaf(node);
  Node c0;
  c0.v = {m, a, b};
  c0.parent = node;
  c0.level = nodes_[node].level + 1;
  Node c1 = c0;
  c1.v = {m, c, a};
  const int i0 = static_cast<int>(nodes_.size());
  nodes_.push_back(c0);
  nodes_.push_back(c1);
  nodes_[node].child = {i0, i0 + 1};
  nodes_[node].midpoint = m;
  bisected_at_[m].push_back(node);
  attach_leaf(i0);
  attach_leaf(i0 + 1);
}

void MeshHierarchy::refine_leaf(int t) {
  if (!nodes_[t].leaf()) return;
  const auto key = edge_key(nodes_[t].v[1], nodes_[t].v[2]);
  auto neighbour = [&]() {
    auto it = edge_leaves_.find(key);
    if (it == edge_leaves_.end()) return -1;
    return it->second[0] == t ? it->second[1] : it->second[0];
  };
  int nb = neighbour();
  if (nb >= 0 && edge_key(nodes_[nb].v[1], nodes_[nb].v[2]) != key) {
    refine_leaf(nb);
    if (!nodes_[t].leaf()) return;
    nb = neighbour();
    if (nb >= 0 && edge_key(nodes_[nb].v[1], nodes_[nb].v[2]) != key) {
      throw InvalidState("hierarchy: incompatible refinement edges");
    }
  }
  bisect(t);
  if (nb >= 0) bisect(nb);
}

bool MeshHierarchy::try_coarsen(int m) {
  auto it = bisected_at_.find(m);
  if (it == bisected_at_.end()) return false;
  for (int p : it->second) {
    const auto& node = nodes_[p];
    for (int c : node.child) {
      if (!nodes_[c].leaf() || nodes_[c].streak < 2) return false;
      if (split_.count(edge_key(nodes_[c].v[1], nodes_[c].v[2]))) return false;
    }
  }
  for (int p : it->second) {
    auto& node = nodes_[p];
    int streak = nodes_[node.child[0]].streak;
    for (int c : node.child) {
      detach_leaf(c);
      nodes_[c].alive = false;
      streak = std::min(streak, nodes_[c].streak);
    }
    node.child = {-1, -1};
    node.midpoint = -1;
    node.streak = streak;
    attach_leaf(p);
  }
  const auto& pv = nodes_[it->second.front()].v;
  split_.erase(edge_key(pv[1], pv[2]));
  valive_[m] = 0;
  bisected_at_.erase(it);
  return true;
}

void MeshHierarchy::coarsen_pass() {
  // newest midpoints first so a whole chain can collapse in a single pass
  std::vector<int> candidates;
  for (const auto& [m, parents] : bisected_at_) candidates.push_back(m);
  for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) try_coarsen(*it);
}

namespace {

template <typename Node, typename F>
void for_each_leaf(const std::vector<Node>& nodes, const std::vector<int>& roots, F&& f) {
  std::vector<int> stack;
  for (int r : roots) {
    stack.push_back(r);
    while (!stack.empty()) {
      const int n = stack.back();
      stack.pop_back();
      if (nodes[n].leaf()) {
        f(n);
      } else {
        stack.push_back(nodes[n].child[1]);
        stack.push_back(nodes[n].child[0]);
      }
    }
  }
}

}  // namespace

Transfer MeshHierarchy::refine_to_indicator(std::span<const int> marked,
                                            const RefinementSpec& spec) {
  spec.validate();
  const int target = spec.target_level();
  std::vector<char> region(nodes_.size(), 0);
  std::vector<int> stack;
  for (int t : marked) {
    if (t < 0 || t >= static_cast<int>(leaf_nodes_.size())) {
      throw InvalidArgument("refine_to_indicator: triangle index out of range");
    }
    region[leaf_nodes_[t]] = 1;
    stack.push_back(leaf_nodes_[t]);
  }
  while (!stack.empty()) {
    const int t = stack.back();
    stack.pop_back();
    if (nodes_[t].leaf() && nodes_[t].level < target) refine_leaf(t);
    if (!nodes_[t].leaf()) {
      region.resize(nodes_.size(), 0);
      for (int c : nodes_[t].child) {
        region[c] = 1;
        stack.push_back(c);
      }
    }
  }
  region.resize(nodes_.size(), 0);
  for_each_leaf(nodes_, roots_, [&](int n) {
    bool in = false;
    for (int a = n; a >= 0 && !in; a = nodes_[a].parent) in = region[a];
    nodes_[n].streak = in ? 0 : nodes_[n].streak + 1;
  });
  coarsen_pass();
  return snapshot();
}

Transfer MeshHierarchy::adapt_to_band(std::span<const double> phi, const RefinementSpec& spec,
                                      const std::function<double(const Vec2&)>& exact) {
  spec.validate();
  if (static_cast<int>(phi.size()) != mesh_->num_vertices()) {
    throw InvalidState("adapt_to_band: phi size does not match vertex count");
  }
  const int target = spec.target_level();
  const double lim = 1.0 - spec.band_delta;
  std::vector<double> val(vpos_.size(), 0.0);
  for (int i = 0; i < mesh_->num_vertices(); ++i) val[mesh_->vertex_key[i]] = phi[i];

  auto in_band = [&](int n) {
    const auto& v = nodes_[n].v;
    const double lo = std::min({val[v[0]], val[v[1]], val[v[2]]});
    const double hi = std::max({val[v[0]], val[v[1]], val[v[2]]});
    return lo <= lim && hi >= -lim;
  };

  for (;;) {
    std::vector<int> todo;
    for_each_leaf(nodes_, roots_, [&](int n) {
      if (nodes_[n].level < target && in_band(n)) todo.push_back(n);
    });
    if (todo.empty()) break;
    created_.clear();
    for (int t : todo) {
      if (nodes_[t].leaf() && nodes_[t].level < target) refine_leaf(t);
    }
    val.resize(vpos_.size(), 0.0);
    for (int m : created_) {
      const auto& p = vparent_[m];
      val[m] = exact ? exact(vpos_[m]) : 0.5 * (val[p[0]] + val[p[1]]);
    }
  }
  for_each_leaf(nodes_, roots_,
                [&](int n) { nodes_[n].streak = in_band(n) ? 0 : nodes_[n].streak + 1; });
  coarsen_pass();
  return snapshot();
}

void MeshHierarchy::rebuild_indices() {
  split_.clear();
  edge_leaves_.clear();
  bisected_at_.clear();
  for (int n = 0; n < static_cast<int>(nodes_.size()); ++n) {
    const Node& node = nodes_[n];
    if (!node.alive || node.leaf()) continue;
    split_[edge_key(node.v[1], node.v[2])] = node.midpoint;
    bisected_at_[node.midpoint].push_back(n);
  }
  for_each_leaf(nodes_, roots_, [&](int n) { attach_leaf(n); });
}

Transfer MeshHierarchy::snapshot() {
  leaf_nodes_.clear();
  for_each_leaf(nodes_, roots_, [&](int n) { leaf_nodes_.push_back(n); });

  std::vector<char> used(vpos_.size(), 0);
  for (int n : leaf_nodes_) {
    for (int v : nodes_[n].v) used[v] = 1;
  }
  std::vector<int> compact(vpos_.size(), -1);
  auto m = std::make_shared<Mesh>();
  m->box = box_;
  for (int g = 0; g < static_cast<int>(vpos_.size()); ++g) {
    if (!used[g]) continue;
    if (!valive_[g]) throw InvalidState("hierarchy: leaf references a removed vertex");
    compact[g] = m->num_vertices();
    m->vertices.push_back(vpos_[g]);
    m->vertex_key.push_back(g);
  }
  for (int n : leaf_nodes_) {
    const auto& v = nodes_[n].v;
    m->triangles.push_back({compact[v[0]], compact[v[1]], compact[v[2]]});
    m->level.push_back(nodes_[n].level);
  }
  const EdgeTable et = build_edges(*m);
  for (int e = 0; e < et.num_edges(); ++e) {
    if (et.on_boundary[e]) m->boundary_edges.push_back(et.edges[e]);
  }

  Transfer tr;
  const int nv = m->num_vertices();
  tr.old_vertex.assign(nv, -1);
  tr.edge_parent.assign(nv, {-1, -1});
  std::vector<int> old_of(vpos_.size(), -1);
  if (mesh_) {
    for (int i = 0; i < mesh_->num_vertices(); ++i) old_of[mesh_->vertex_key[i]] = i;
    tr.old_count = mesh_->num_vertices();
  }
  for (int i = 0; i < nv; ++i) {
    const int g = m->vertex_key[i];
    tr.old_vertex[i] = old_of[g];
    if (old_of[g] < 0 && vparent_[g][0] >= 0) {
      tr.edge_parent[i] = {compact[vparent_[g][0]], compact[vparent_[g][1]]};
    }
  }
  mesh_ = std::move(m);
  return tr;
}

void MeshHierarchy::save(std::ostream& out) const {
  using namespace detail;
  write_pod(out, kHierarchyMagic);
  write_pod(out, box_);
  write_pod(out, coarse_n_);
  std::vector<double> xy;
  xy.reserve(2 * vpos_.size());
  for (const auto& p : vpos_) {
    xy.push_back(p.x());
    xy.push_back(p.y());
  }
  write_vector(out, xy);
  write_vector(out, vparent_);
  write_vector(out, valive_);
  write_pod<std::uint64_t>(out, nodes_.size());
  for (const Node& n : nodes_) {
    write_pod(out, n.v);
    write_pod(out, n.parent);
    write_pod(out, n.child);
    write_pod(out, n.level);
    write_pod(out, n.midpoint);
    write_pod(out, n.streak);
    write_pod<char>(out, n.alive ? 1 : 0);
  }
  write_vector(out, roots_);
  // the snapshot numbering is part of the state: keep the current vertex keys
  write_vector(out, mesh_->vertex_key);
}

MeshHierarchy MeshHierarchy::load(std::istream& in) {
  using namespace detail;
  if (read_pod<std::uint32_t>(in) != kHierarchyMagic) {
    throw InvalidState("hierarchy: bad magic in stream");
  }
  MeshHierarchy h;
  h.box_ = read_pod<Box>(in);
  h.coarse_n_ = read_pod<int>(in);
  const auto xy = read_vector<double>(in);
  for (std::size_t i = 0; i + 1 < xy.size(); i += 2) h.vpos_.emplace_back(xy[i], xy[i + 1]);
  h.vparent_ = read_vector<std::array<int, 2>>(in);
  h.valive_ = read_vector<char>(in);
  const auto nn = read_pod<std::uint64_t>(in);
  h.nodes_.resize(nn);
  for (Node& n : h.nodes_) {
    n.v = read_pod<std::array<int, 3>>(in);
    n.parent = read_pod<int>(in);
    n.child = read_pod<std::array<int, 2>>(in);
    n.level = read_pod<int>(in);
    n.midpoint = read_pod<int>(in);
    n.streak = read_pod<int>(in);
    n.alive = read_pod<char>(in) != 0;
  }
  h.roots_ = read_vector<int>(in);
  const auto keys = read_vector<int>(in);
  h.rebuild_indices();
  h.snapshot();
  if (h.mesh_->vertex_key != keys) throw InvalidState("hierarchy: snapshot mismatch on load");
  return h;
}

}  // namespace vech
