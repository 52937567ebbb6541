#include "vech/matfun.hpp"

#include "vech/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vech {

double Sym2::norm() const { return std::sqrt(xx * xx + 2.0 * xy * xy + yy * yy); }

Mat2 Sym2::matrix() const {
  Mat2 m;
  m << xx, xy, xy, yy;
  return m;
}

double ddot(const Sym2& a, const Sym2& b) { return a.xx * b.xx + 2.0 * a.xy * b.xy + a.yy * b.yy; }

Sym2 sym_part(const Mat2& m) { return {m(0, 0), 0.5 * (m(0, 1) + m(1, 0)), m(1, 1)}; }

Eigen2 eigen(const Sym2& m) {
  Eigen2 e;
  if (std::abs(m.xy) <= 1e-14 * m.norm()) {
    if (m.xx <= m.yy) {
      e.values = {m.xx, m.yy};
      e.vectors = {Vec2(1, 0), Vec2(0, 1)};
    } else {
      e.values = {m.yy, m.xx};
      e.vectors = {Vec2(0, 1), Vec2(1, 0)};
    }
    return e;
  }
  const double mean = 0.5 * (m.xx + m.yy);
  const double half = 0.5 * (m.xx - m.yy);
  const double r = std::hypot(half, m.xy);
  e.values = {mean - r, mean + r};
  // eigenvector of the larger eigenvalue from the better-conditioned row
  Vec2 v;
  if (half >= 0) {
    v = Vec2(half + r, m.xy);
  } else {
    v = Vec2(m.xy, r - half);
  }
  v.normalize();
  e.vectors[1] = v;
  e.vectors[0] = Vec2(-v.y(), v.x());
  return e;
}

double min_eigenvalue(const Sym2& m) { return eigen(m).values[0]; }

Sym2 mat_log(const Sym2& m) {
  return spectral_apply(
      [](double s) {
        if (!(s > 0.0)) throw DomainError("matrix logarithm of a non positive definite matrix");
        return std::log(s);
      },
      m);
}

Sym2 mat_inverse(const Sym2& m) {
  const double d = m.det();
  if (d == 0.0) throw DomainError("inverse of a singular matrix");
  return {m.yy / d, -m.xy / d, m.xx / d};
}

Sym2 negative_part(const Sym2& m) {
  return spectral_apply([](double s) { return std::min(s, 0.0); }, m);
}

double g_delta(double s, double delta) {
  return s < delta ? s / delta + std::log(delta) - 1.0 : std::log(s);
}

double g_delta_prime(double s, double delta) { return s < delta ? 1.0 / delta : 1.0 / s; }

double beta_delta(double s, double delta) { return std::max(s, delta); }

double g_L(double s, double L) {
  if (!(s > 0.0)) throw DomainError("g_L requires a positive argument");
  return s < L ? std::log(s) : s / L + std::log(L) - 1.0;
}

double g_L_prime(double s, double L) {
  if (!(s > 0.0)) throw DomainError("g_L requires a positive argument");
  return s < L ? 1.0 / s : 1.0 / L;
}

double beta_L(double s, double L) { return std::min(s, L); }

double h_delta(double s, double delta) { return g_L(s, 1.0 / delta); }

bool RegularizationReport::all() const {
  return std::all_of(holds.begin(), holds.end(), [](bool b) { return b; });
}

RegularizationReport regularization_check(const Sym2& phi, const Sym2& psi, double delta, double tol) {
  auto G = [delta](const Sym2& m) {
    return spectral_apply([delta](double s) { return g_delta(s, delta); }, m);
  };
  auto Gp = [delta](const Sym2& m) {
    return spectral_apply([delta](double s) { return g_delta_prime(s, delta); }, m);
  };
  auto beta = [delta](const Sym2& m) {
    return spectral_apply([delta](double s) { return beta_delta(s, delta); }, m);
  };
  const Sym2 I = Sym2::identity();
  const Sym2 b = beta(phi);
  const Sym2 gp_phi = Gp(phi);
  const Sym2 gp_psi = Gp(psi);
  const Sym2 g_phi = G(phi);
  const Sym2 g_psi = G(psi);

  RegularizationReport r;
  const Mat2 prod1 = b.matrix() * gp_phi.matrix();
  const Mat2 prod2 = gp_phi.matrix() * b.matrix();
  const double defect =
      std::max((prod1 - Mat2::Identity()).norm(), (prod2 - Mat2::Identity()).norm());
  r.slack[0] = -defect;
  r.slack[1] = (b + mat_inverse(b) - I * 2.0).trace();
  r.slack[2] = (phi - g_phi - I).trace();
  r.slack[3] = ddot(phi - b, I - gp_phi);
  r.slack[4] = ddot(phi - psi, gp_psi) - (g_phi - g_psi).trace();
  const Sym2 dg = gp_phi - gp_psi;
  r.slack[5] = -ddot(phi - psi, dg) - delta * delta * ddot(dg, dg);
  if (delta <= 0.5) {
    const double lhs = (phi - g_phi).trace();
    r.slack[6] = lhs - std::max(0.5 * phi.norm(), negative_part(phi).norm() / (2.0 * delta));
    r.slack[7] = ddot(phi, I - gp_phi) - (0.5 * phi.norm() - 2.0);
  } else {
    r.slack[6] = std::numeric_limits<double>::infinity();
    r.slack[7] = std::numeric_limits<double>::infinity();
  }
  r.holds[0] = defect <= 1e-12;
  for (int k = 1; k < 8; ++k) r.holds[k] = r.slack[k] >= -tol;
  return r;
}

double elastic_trace_energy(const Sym2& b) { return 0.5 * (b - mat_log(b)).trace(); }

Sym2 elastic_stress(const Sym2& b, double kappa) { return (b - Sym2::identity()) * kappa; }

}  // namespace vech
