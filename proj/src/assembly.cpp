#include "vech/assembly.hpp"

#include "vech/errors.hpp"

#include <cmath>

namespace vech {

namespace {

struct QuadTables {
  std::array<std::array<double, 6>, 6> p2;  // [q][basis]
};

const QuadTables& tables() {
  static const QuadTables t = [] {
    QuadTables q;
    const auto& rule = quadrature_deg4();
    for (int k = 0; k < 6; ++k) q.p2[k] = p2_values(rule[k].lambda);
    return q;
  }();
  return t;
}

double p1_at(const Vec& q, const std::array<int, 3>& tri, const std::array<double, 3>& l,
             int offset = 0) {
  return l[0] * q[offset + tri[0]] + l[1] * q[offset + tri[1]] + l[2] * q[offset + tri[2]];
}

Vec2 p1_grad(const Vec& q, const std::array<int, 3>& tri, const Element& e, int offset = 0) {
  return q[offset + tri[0]] * e.grad[0] + q[offset + tri[1]] * e.grad[1] +
         q[offset + tri[2]] * e.grad[2];
}

Vec2 p2_vec_at(const Vec& v, int np2, const std::array<int, 6>& nodes,
               const std::array<double, 6>& phi) {
  Vec2 out = Vec2::Zero();
  for (int a = 0; a < 6; ++a) {
    out.x() += phi[a] * v[nodes[a]];
    out.y() += phi[a] * v[np2 + nodes[a]];
  }
  return out;
}

// (grad v)_{kl} = d v_k / d x_l
Mat2 p2_vec_grad(const Vec& v, int np2, const std::array<int, 6>& nodes,
                 const std::array<Vec2, 6>& g) {
  Mat2 out = Mat2::Zero();
  for (int a = 0; a < 6; ++a) {
    out.row(0) += v[nodes[a]] * g[a].transpose();
    out.row(1) += v[np2 + nodes[a]] * g[a].transpose();
  }
  return out;
}

void check_size(const Vec& v, int n, const char* what) {
  if (v.size() != n) throw InvalidState(std::string("field size mismatch: ") + what);
}

void check_sweep(const Discretization& d, const SweepFields& f) {
  if (!f.prev) throw InvalidState("sweep fields without previous state");
  check_size(f.prev->phi, d.nv, "previous phi");
  check_size(f.prev->sigma, d.nv, "previous sigma");
  check_size(f.prev->v, 2 * d.np2, "previous velocity");
  check_size(f.prev->B, 3 * d.nv, "previous B");
  check_size(f.phi, d.nv, "phi");
  check_size(f.sigma, d.nv, "sigma");
  check_size(f.v, 2 * d.np2, "velocity");
  check_size(f.B, 3 * d.nv, "B");
}

Sym2 B_node(const Vec& B, int nv, int i) { return {B[i], B[nv + i], B[2 * nv + i]}; }

Vec trace_log_term(const Vec& B, int nv) {
  Vec out(nv);
  for (int i = 0; i < nv; ++i) {
    const Sym2 b = B_node(B, nv, i);
    out[i] = (b - mat_log(b)).trace();
  }
  return out;
}

}  // namespace

Discretization::Discretization(std::shared_ptr<const Mesh> m) : mesh(std::move(m)) {
  edges = build_edges(*mesh);
  lumped = lumped_mass(*mesh);
  stiffness = assemble_p1_stiffness(*mesh);
  p2_mass = assemble_p2_mass(*mesh, edges);
  p2_boundary = p2_boundary_nodes(*mesh, edges);
  nv = mesh->num_vertices();
  np2 = nv + edges.num_edges();
  vel_index.assign(2 * np2, -1);
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < np2; ++i) {
      if (p2_boundary[i]) continue;
      vel_index[c * np2 + i] = static_cast<int>(vel_free.size());
      vel_free.push_back(c * np2 + i);
    }
  }
}

CHProblem::CHProblem(const Discretization& d, const ModelParams& p, const SweepFields& f)
    : d_(d), p_(p), nv_(d.nv) {
  check_sweep(d, f);
  const Mesh& mesh = *d.mesh;
  phi_prev_ = f.prev->phi;
  sigma_ = f.sigma;
  B_.resize(nv_);
  for (int i = 0; i < nv_; ++i) B_[i] = B_node(f.B, nv_, i);

  Vec mob(nv_);
  for (int i = 0; i < nv_; ++i) mob[i] = mobility_of(phi_prev_[i], p);
  Km_ = assemble_p1_stiffness(mesh, mob);

  convection_ = Vec::Zero(nv_);
  const auto& rule = quadrature_deg4();
  const auto& tab = tables();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Element e = element(mesh, t);
    const auto nodes = p2_nodes(mesh, d.edges, t);
    for (int q = 0; q < 6; ++q) {
      const double w = rule[q].weight * e.area;
      const double ph = p1_at(phi_prev_, tri, rule[q].lambda);
      const Vec2 v = p2_vec_at(f.v, d.np2, nodes, tab.p2[q]);
      for (int i = 0; i < 3; ++i) convection_[tri[i]] -= w * ph * v.dot(e.grad[i]);
    }
  }

  explicit_mu_.resize(nv_);
  for (int i = 0; i < nv_; ++i) {
    explicit_mu_[i] = p.A() * psi2_prime(phi_prev_[i], p.potential) - p.chi_phi * sigma_[i];
  }
  if (p.phase_dependent_kappa) {
    explicit_mu_ += 0.25 * (p.kappa_1 - p.kappa_m1) * trace_log_term(f.B, nv_);
  }
}

Vec CHProblem::residual(const Vec& x) const {
  const auto phi = x.head(nv_);
  const auto mu = x.tail(nv_);
  const Vec& W = d_.lumped.weights;
  Vec r(2 * nv_);
  Vec gam(nv_), psi1(nv_);
  for (int i = 0; i < nv_; ++i) {
    gam[i] = gamma_phi(phi[i], sigma_[i], B_[i], p_);
    psi1[i] = p_.A() * psi1_prime(phi[i], p_.potential);
  }
  r.head(nv_) = W.cwiseProduct((phi - phi_prev_) / p_.dt - gam) + Km_ * mu + convection_;
  r.tail(nv_) = W.cwiseProduct(-mu + psi1 + explicit_mu_) + p_.B() * (d_.stiffness * phi);
  return r;
}

SparseOperator CHProblem::jacobian(const Vec& x) const {
  const Vec& W = d_.lumped.weights;
  Triplets trip;
  trip.reserve(2 * (Km_.nonZeros() + d_.stiffness.nonZeros()) + 2 * nv_);
  for (int i = 0; i < nv_; ++i) {
    const double ph = x[i];
    const double dg = gamma_phi_dphi(ph, sigma_[i], B_[i], p_, kappa_of(ph, p_));
    trip.emplace_back(i, i, W[i] * (1.0 / p_.dt - dg));
    trip.emplace_back(nv_ + i, i, W[i] * p_.A() * psi1_second(ph, p_.potential));
    trip.emplace_back(nv_ + i, nv_ + i, -W[i]);
  }
  for (int r = 0; r < nv_; ++r) {
    for (SparseOperator::InnerIterator it(Km_, r); it; ++it) {
      trip.emplace_back(r, nv_ + it.col(), it.value());
    }
    for (SparseOperator::InnerIterator it(d_.stiffness, r); it; ++it) {
      trip.emplace_back(nv_ + r, it.col(), p_.B() * it.value());
    }
  }
  return from_triplets(2 * nv_, 2 * nv_, trip);
}

SystemBlock assemble_nutrient(const Discretization& d, const ModelParams& p,
                              const SweepFields& f) {
  check_sweep(d, f);
  const Mesh& mesh = *d.mesh;
  const int nv = d.nv;
  const Vec& W = d.lumped.weights;
  const Vec& Wb = d.lumped.boundary_weights;
  const Vec& s_prev = f.prev->sigma;

  SystemBlock blk;
  blk.kind = BlockKind::Nutrient;
  Vec diag(nv);
  blk.rhs = W.cwiseProduct(s_prev) / p.dt + p.K * p.sigma_infty * Wb;
  for (int i = 0; i < nv; ++i) {
    const double h = h_cut(f.phi[i]);
    double implicit = 0.0;
    // clamp of g(sigma) frozen at the previous level
    if (s_prev[i] > 1.0) {
      blk.rhs[i] -= W[i] * p.C * h;
    } else if (s_prev[i] >= 0.0) {
      implicit = p.C * h;
    }
    diag[i] = W[i] * (1.0 / p.dt + implicit) + p.K * Wb[i];
  }
  // n(phi) = n0 is constant
  const SparseOperator Kn = d.stiffness * p.n0;
  blk.rhs += p.chi_phi * (Kn * f.phi);

  const auto& rule = quadrature_deg4();
  const auto& tab = tables();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Element e = element(mesh, t);
    const auto nodes = p2_nodes(mesh, d.edges, t);
    for (int q = 0; q < 6; ++q) {
      const double w = rule[q].weight * e.area;
      const double sg = p1_at(s_prev, tri, rule[q].lambda);
      const Vec2 v = p2_vec_at(f.v, d.np2, nodes, tab.p2[q]);
      for (int i = 0; i < 3; ++i) blk.rhs[tri[i]] += w * sg * v.dot(e.grad[i]);
    }
  }
  blk.op = Kn * p.chi_sigma;
  for (int i = 0; i < nv; ++i) blk.op.coeffRef(i, i) += diag[i];
  blk.op.makeCompressed();
  return blk;
}

SystemBlock assemble_nutrient_quasistatic(const Discretization& d, const ModelParams& p,
                                          const Vec& phi, const std::vector<int>& clamp) {
  check_size(phi, d.nv, "phi");
  const Vec& W = d.lumped.weights;
  const Vec& Wb = d.lumped.boundary_weights;
  SystemBlock blk;
  blk.kind = BlockKind::Nutrient;
  const SparseOperator Kn = d.stiffness * p.n0;
  blk.op = Kn * p.chi_sigma;
  blk.rhs = p.chi_phi * (Kn * phi) + p.K * p.sigma_infty * Wb;
  for (int i = 0; i < d.nv; ++i) {
    const double g = p.C * h_cut(phi[i]);
    double diag = p.K * Wb[i];
    if (clamp[i] == 1) diag += W[i] * g;
    if (clamp[i] == 2) blk.rhs[i] -= W[i] * g;
    blk.op.coeffRef(i, i) += diag;
  }
  blk.op.makeCompressed();
  return blk;
}

SystemBlock assemble_saddle(const Discretization& d, const ModelParams& p, const SweepFields& f,
                            const SaddleOptions& opt) {
  check_sweep(d, f);
  const Mesh& mesh = *d.mesh;
  const int nv = d.nv;
  const int np2 = d.np2;
  const int nu = d.num_velocity_unknowns();
  const int n = nu + nv + 1;
  const State& prev = *f.prev;

  Vec eta_node(nv), kappa_node(nv), trlog;
  for (int i = 0; i < nv; ++i) {
    eta_node[i] = opt.eta_override > 0 ? opt.eta_override : eta_of(prev.phi[i], p);
    kappa_node[i] = kappa_of(f.phi[i], p);
  }
  const bool variant = p.phase_dependent_kappa && opt.model_forcing;
  if (variant) trlog = trace_log_term(f.B, nv);
  // chi_sigma sigma - chi_phi phi
  const Vec drive = p.chi_sigma * f.sigma - p.chi_phi * f.phi;

  SystemBlock blk;
  blk.kind = BlockKind::Saddle;
  blk.rhs = Vec::Zero(n);
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(mesh.num_triangles()) * (144 + 72) + 2 * nv);

  const auto& rule = quadrature_deg4();
  const auto& tab = tables();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Element e = element(mesh, t);
    const auto nodes = p2_nodes(mesh, d.edges, t);
    double A[12][12] = {};
    double D[3][12] = {};
    double F[12] = {};
    const Vec2 grad_mu = p1_grad(f.mu, tri, e);
    const Vec2 grad_drive = p1_grad(drive, tri, e);
    const Vec2 grad_trlog = variant ? p1_grad(trlog, tri, e) : Vec2::Zero();
    for (int q = 0; q < 6; ++q) {
      const auto& lam = rule[q].lambda;
      const double w = rule[q].weight * e.area;
      const auto& phi = tab.p2[q];
      const auto g = p2_gradients(lam, e);
      const double eta = p1_at(eta_node, tri, lam);
      const Vec2 vp = p2_vec_at(prev.v, np2, nodes, phi);
      std::array<double, 6> adv{};
      for (int a = 0; a < 6; ++a) adv[a] = vp.dot(g[a]);

      for (int b = 0; b < 6; ++b) {
        for (int a = 0; a < 6; ++a) {
          const double gg = g[a].dot(g[b]);
          const double m = opt.time_term ? phi[a] * phi[b] / p.dt : 0.0;
          const double c = opt.convection ? 0.5 * (adv[a] * phi[b] - phi[a] * adv[b]) : 0.0;
          for (int dd = 0; dd < 2; ++dd) {
            for (int cc = 0; cc < 2; ++cc) {
              double val = eta * g[a][dd] * g[b][cc];
              if (cc == dd) val += eta * gg + m + c;
              A[dd * 6 + b][cc * 6 + a] += w * val;
            }
          }
        }
        for (int j = 0; j < 3; ++j) {
          for (int cc = 0; cc < 2; ++cc) D[j][cc * 6 + b] -= w * lam[j] * g[b][cc];
        }
      }

      Vec2 force = Vec2::Zero();
      Mat2 T = Mat2::Zero();
      if (opt.model_forcing) {
        const double ph_prev = p1_at(prev.phi, tri, lam);
        const double sg_prev = p1_at(prev.sigma, tri, lam);
        force -= ph_prev * grad_mu + sg_prev * grad_drive;
        if (variant) force -= 0.25 * (p.kappa_1 - p.kappa_m1) * ph_prev * grad_trlog;
        const double kap = p1_at(kappa_node, tri, lam);
        const double bxx = p1_at(f.B, tri, lam), bxy = p1_at(f.B, tri, lam, nv),
                     byy = p1_at(f.B, tri, lam, 2 * nv);
        T << kap * (bxx - 1.0), kap * bxy, kap * bxy, kap * (byy - 1.0);
      }
      if (opt.body_force) {
        Vec2 x = Vec2::Zero();
        for (int k = 0; k < 3; ++k) x += lam[k] * mesh.vertices[tri[k]];
        force += opt.body_force(x);
      }
      if (opt.time_term) force += vp / p.dt;
      for (int b = 0; b < 6; ++b) {
        for (int dd = 0; dd < 2; ++dd) {
          F[dd * 6 + b] += w * (force[dd] * phi[b] - T.row(dd).dot(g[b]));
        }
      }
    }

    for (int r = 0; r < 12; ++r) {
      const int row = d.vel_index[(r / 6) * np2 + nodes[r % 6]];
      if (row < 0) continue;
      blk.rhs[row] += F[r];
      for (int c = 0; c < 12; ++c) {
        const int col = d.vel_index[(c / 6) * np2 + nodes[c % 6]];
        if (col >= 0 && A[r][c] != 0.0) trip.emplace_back(row, col, A[r][c]);
      }
      for (int j = 0; j < 3; ++j) {
        trip.emplace_back(row, nu + tri[j], D[j][r]);
        trip.emplace_back(nu + tri[j], row, D[j][r]);
      }
    }
  }
  for (int i = 0; i < nv; ++i) {
    trip.emplace_back(nu + nv, nu + i, d.lumped.weights[i]);
    trip.emplace_back(nu + i, nu + nv, d.lumped.weights[i]);
  }
  blk.op = from_triplets(n, n, trip);
  return blk;
}

void split_saddle(const Discretization& d, const Vec& x, Vec& v, Vec& pressure) {
  const int nu = d.num_velocity_unknowns();
  v = Vec::Zero(2 * d.np2);
  for (int k = 0; k < nu; ++k) v[d.vel_free[k]] = x[k];
  pressure = x.segment(nu, d.nv);
}

SystemBlock assemble_oldroyd(const Discretization& d, const ModelParams& p, const SweepFields& f,
                             bool lump_products) {
  check_sweep(d, f);
  const Mesh& mesh = *d.mesh;
  const int nv = d.nv;
  const int np2 = d.np2;
  const State& prev = *f.prev;
  const Vec& W = d.lumped.weights;

  SystemBlock blk;
  blk.kind = BlockKind::Tensor;
  blk.rhs.resize(3 * nv);
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 81 + 3 * nv);
  for (int i = 0; i < nv; ++i) {
    const double relax = kappa_of(f.phi[i], p) / tau_of(prev.phi[i], p);
    const double gam = gamma_B(prev.phi[i], prev.sigma[i], p);
    for (int c = 0; c < 3; ++c) {
      trip.emplace_back(c * nv + i, c * nv + i, W[i] * (1.0 / p.dt + relax + gam));
      const double identity = c == 1 ? 0.0 : 1.0;
      blk.rhs[c * nv + i] = W[i] * (prev.B[c * nv + i] / p.dt + relax * identity);
    }
  }

  std::array<Mat2, 3> E, Fb;
  E[0] << 1, 0, 0, 0;
  E[1] << 0, 0.5, 0.5, 0;
  E[2] << 0, 0, 0, 1;
  Fb[0] << 1, 0, 0, 0;
  Fb[1] << 0, 1, 1, 0;
  Fb[2] << 0, 0, 0, 1;

  const auto& rule = quadrature_deg4();
  const auto& tab = tables();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Element e = element(mesh, t);
    const auto nodes = p2_nodes(mesh, d.edges, t);
    double L[3][3][3][3] = {};  // [c][i][d][j]
    for (int q = 0; q < 6; ++q) {
      const auto& lam = rule[q].lambda;
      const double w = rule[q].weight * e.area;
      const auto g = p2_gradients(lam, e);
      const Mat2 gv = p2_vec_grad(f.v, np2, nodes, g);
      const Vec2 vp = p2_vec_at(prev.v, np2, nodes, tab.p2[q]);
      double S[3][3];
      for (int c = 0; c < 3; ++c) {
        for (int dd = 0; dd < 3; ++dd) S[c][dd] = (gv.array() * (E[c] * Fb[dd]).array()).sum();
      }
      for (int i = 0; i < 3; ++i) {
        const double adv = vp.dot(e.grad[i]);
        for (int j = 0; j < 3; ++j) {
          const double zz = lump_products ? (i == j ? lam[i] : 0.0) : lam[i] * lam[j];
          for (int c = 0; c < 3; ++c) {
            for (int dd = 0; dd < 3; ++dd) L[c][i][dd][j] -= w * 2.0 * zz * S[c][dd];
            L[c][i][c][j] -= w * lam[j] * adv;
          }
        }
      }
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double k = p.alpha * e.area * e.grad[i].dot(e.grad[j]);
        for (int c = 0; c < 3; ++c) {
          L[c][i][c][j] += k;
          for (int dd = 0; dd < 3; ++dd) {
            if (L[c][i][dd][j] != 0.0) {
              trip.emplace_back(c * nv + tri[i], dd * nv + tri[j], L[c][i][dd][j]);
            }
          }
        }
      }
    }
  }
  blk.op = from_triplets(3 * nv, 3 * nv, trip);
  return blk;
}

SparseOperator assemble_convection_p2(const Discretization& d, const Vec& v_prev) {
  const Mesh& mesh = *d.mesh;
  const auto& rule = quadrature_deg4();
  const auto& tab = tables();
  Triplets trip;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Element e = element(mesh, t);
    const auto nodes = p2_nodes(mesh, d.edges, t);
    for (int q = 0; q < 6; ++q) {
      const double w = rule[q].weight * e.area;
      const auto& phi = tab.p2[q];
      const auto g = p2_gradients(rule[q].lambda, e);
      const Vec2 vp = p2_vec_at(v_prev, d.np2, nodes, phi);
      for (int b = 0; b < 6; ++b) {
        for (int a = 0; a < 6; ++a) {
          trip.emplace_back(nodes[b], nodes[a],
                            w * 0.5 * (vp.dot(g[a]) * phi[b] - phi[a] * vp.dot(g[b])));
        }
      }
    }
  }
  return from_triplets(d.np2, d.np2, trip);
}

double divergence_residual(const Discretization& d, const Vec& v) {
  const Mesh& mesh = *d.mesh;
  const auto& rule = quadrature_deg4();
  Vec r = Vec::Zero(d.nv);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Element e = element(mesh, t);
    const auto nodes = p2_nodes(mesh, d.edges, t);
    for (int q = 0; q < 6; ++q) {
      const double w = rule[q].weight * e.area;
      const Mat2 gv = p2_vec_grad(v, d.np2, nodes, p2_gradients(rule[q].lambda, e));
      for (int j = 0; j < 3; ++j) r[tri[j]] += w * gv.trace() * rule[q].lambda[j];
    }
  }
  return r.cwiseAbs().maxCoeff();
}

double velocity_h1(const Discretization& d, const Vec& v) {
  const Mesh& mesh = *d.mesh;
  const auto& rule = quadrature_deg4();
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Element e = element(mesh, t);
    const auto nodes = p2_nodes(mesh, d.edges, t);
    for (int q = 0; q < 6; ++q) {
      const Mat2 gv = p2_vec_grad(v, d.np2, nodes, p2_gradients(rule[q].lambda, e));
      s += rule[q].weight * e.area * gv.squaredNorm();
    }
  }
  return std::sqrt(s);
}

}  // namespace vech
