#include "vech/init.hpp"

#include "vech/errors.hpp"

#include <cmath>

namespace vech {

std::function<double(const Vec2&)> phi0_function(const InitialSpec& spec, double epsilon) {
  if (spec.phi0) return spec.phi0;
  const double R = spec.radius_scale, amp = spec.amplitude;
  const int mode = spec.mode;
  return [=](const Vec2& x) {
    const double theta = std::atan2(x.y(), x.x());
    const double r = x.norm() - R * (2.0 + amp * std::cos(mode * theta));
    return -std::tanh(r / (std::sqrt(2.0) * epsilon));
  };
}

Vec make_phi0(const Mesh& mesh, const InitialSpec& spec, double epsilon) {
  return nodal_interpolate(mesh, phi0_function(spec, epsilon));
}

Vec make_sigma0_quasistatic(const Discretization& d, const Vec& phi0, const ModelParams& p,
                            const LinearConfig& lin) {
  auto clamp_of = [](double s) { return s > 1.0 ? 2 : (s >= 0.0 ? 1 : 0); };
  std::vector<int> clamp(d.nv, clamp_of(p.sigma_infty));
  Vec sigma = Vec::Constant(d.nv, p.sigma_infty);
  std::vector<double> changes;
  for (int it = 0; it < 50; ++it) {
    const SystemBlock blk = assemble_nutrient_quasistatic(d, p, phi0, clamp);
    krylov_solve(blk.op, blk.rhs, sigma, lin);
    int changed = 0;
    for (int i = 0; i < d.nv; ++i) {
      const int c = clamp_of(sigma[i]);
      if (c != clamp[i]) {
        clamp[i] = c;
        ++changed;
      }
    }
    if (changed == 0) return sigma;
    changes.push_back(changed);
  }
  throw NonConvergence("quasi-static nutrient: clamp set oscillates", changes);
}

namespace {

Vec sigma_projection_rhs(const Discretization& d, double datum) {
  // int datum * zeta_i = datum * lumped weight (exact for P1)
  return datum * d.lumped.weights;
}

SparseOperator sigma_projection_op(const Discretization& d, double dt) {
  SparseOperator a = d.stiffness * dt;
  for (int i = 0; i < d.nv; ++i) {
    a.coeffRef(i, i) += d.lumped.weights[i] + dt * d.lumped.boundary_weights[i];
  }
  a.makeCompressed();
  return a;
}

}  // namespace

double sigma_projection_residual(const Discretization& d, const Vec& sigma, double datum,
                                 double dt) {
  const Vec r = sigma_projection_op(d, dt) * sigma - sigma_projection_rhs(d, datum);
  return r.norm();
}

ProjectedInitials make_projected_initials(const Discretization& d, const InitialSpec& spec,
                                          double dt, const LinearConfig& lin) {
  ProjectedInitials out;
  LinearConfig spd = lin;
  spd.kind = KrylovKind::CG;
  spd.precond = PrecondKind::Jacobi;

  out.sigma = Vec::Constant(d.nv, spec.sigma0_value);
  krylov_solve(sigma_projection_op(d, dt), sigma_projection_rhs(d, spec.sigma0_value), out.sigma,
               spd);

  // B: lumped mass + dt alpha-free stiffness, componentwise
  SparseOperator bop = d.stiffness * dt;
  for (int i = 0; i < d.nv; ++i) bop.coeffRef(i, i) += d.lumped.weights[i];
  bop.makeCompressed();
  out.B.resize(3 * d.nv);
  const std::array<double, 3> comp{spec.B0.xx, spec.B0.xy, spec.B0.yy};
  for (int c = 0; c < 3; ++c) {
    Vec x = Vec::Constant(d.nv, comp[c]);
    krylov_solve(bop, comp[c] * d.lumped.weights, x, spd);
    out.B.segment(c * d.nv, d.nv) = x;
  }

  // v: (M + dt K) v = int v0 . w over discretely divergence-free w, through a saddle solve
  const Mesh& mesh = *d.mesh;
  const int nu = d.num_velocity_unknowns();
  const int n = nu + d.nv + 1;
  Triplets trip;
  Vec rhs = Vec::Zero(n);
  const auto& rule = quadrature_deg4();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Element e = element(mesh, t);
    const auto nodes = p2_nodes(mesh, d.edges, t);
    for (const auto& q : rule) {
      const double w = q.weight * e.area;
      const auto phi = p2_values(q.lambda);
      const auto g = p2_gradients(q.lambda, e);
      for (int c = 0; c < 2; ++c) {
        for (int b = 0; b < 6; ++b) {
          const int row = d.vel_index[c * d.np2 + nodes[b]];
          if (row < 0) continue;
          rhs[row] += w * spec.v0[c] * phi[b];
          for (int a = 0; a < 6; ++a) {
            const int col = d.vel_index[c * d.np2 + nodes[a]];
            if (col >= 0) trip.emplace_back(row, col, w * (phi[a] * phi[b] + dt * g[a].dot(g[b])));
          }
          for (int j = 0; j < 3; ++j) {
            const double div = -w * q.lambda[j] * g[b][c];
            trip.emplace_back(row, nu + tri[j], div);
            trip.emplace_back(nu + tri[j], row, div);
          }
        }
      }
    }
  }
  for (int i = 0; i < d.nv; ++i) {
    trip.emplace_back(nu + d.nv, nu + i, d.lumped.weights[i]);
    trip.emplace_back(nu + i, nu + d.nv, d.lumped.weights[i]);
  }
  const SparseOperator sop = from_triplets(n, n, trip);
  LinearConfig sad = lin;
  sad.kind = KrylovKind::GMRES;
  sad.precond = PrecondKind::LU;
  Vec x = Vec::Zero(n);
  if (rhs.norm() > 0) krylov_solve(sop, rhs, x, sad);
  Vec pressure;
  split_saddle(d, x, out.v, pressure);
  return out;
}

State make_initial_state(const Discretization& d, const InitialSpec& spec, const ModelParams& p,
                         const LinearConfig& lin) {
  State s;
  s.phi = make_phi0(*d.mesh, spec, p.epsilon);
  if (spec.sigma0 == SigmaInit::QuasiStatic) {
    s.sigma = make_sigma0_quasistatic(d, s.phi, p, lin);
  } else {
    s.sigma = make_projected_initials(d, spec, p.dt, lin).sigma;
  }
  const ProjectedInitials pi = make_projected_initials(d, spec, p.dt, lin);
  s.v = pi.v;
  s.B = pi.B;
  s.p = Vec::Zero(d.nv);
  // mu consistent with the initial phase field (explicit evaluation of the mu equation)
  s.mu.resize(d.nv);
  const Vec lap = d.stiffness * s.phi;
  for (int i = 0; i < d.nv; ++i) {
    s.mu[i] = p.A() * psi_prime(s.phi[i], p.potential) - p.chi_phi * s.sigma[i] +
              p.B() * lap[i] / d.lumped.weights[i];
  }
  s.t = 0.0;
  s.step = 0;
  return s;
}

}  // namespace vech
