#include "vech/model.hpp"

#include "vech/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vech {

double psi(double t, Potential kind) {
  if (kind == Potential::Quartic || std::abs(t) <= 1.0) return 0.25 * (1 - t * t) * (1 - t * t);
  return t > 1.0 ? t * t - 2 * t + 1 : t * t + 2 * t + 1;
}

double psi_prime(double t, Potential kind) {
  if (kind == Potential::Quartic || std::abs(t) <= 1.0) return t * t * t - t;
  return t > 1.0 ? 2 * t - 2 : 2 * t + 2;
}

double psi1_prime(double t, Potential kind) {
  if (kind == Potential::Quartic || std::abs(t) <= 1.0) return t * t * t;
  return t > 1.0 ? 2 * t - 1 : 2 * t + 1;
}

double psi1_second(double t, Potential kind) {
  if (kind == Potential::Quartic || std::abs(t) <= 1.0) return 3 * t * t;
  return 2.0;
}

double psi2_prime(double t, Potential kind) {
  if (kind == Potential::Quartic) return -t;
  return -std::clamp(t, -1.0, 1.0);
}

double h_cut(double x) { return std::clamp(0.5 * (1.0 + x), 0.0, 1.0); }

double h_cut_prime(double x) { return (x > -1.0 && x < 1.0) ? 0.5 : 0.0; }

double g_cut(double s) { return std::clamp(s, 0.0, 1.0); }

double f_stress(const Sym2& b, double kappa) {
  const double n = elastic_stress(b, kappa).norm();
  return 1.0 / std::sqrt(1.0 + n * n);
}

double kappa_of(double phi, const ModelParams& p) {
  if (!p.phase_dependent_kappa) return p.kappa;
  return 0.5 * p.kappa_1 * (1.0 + phi) + 0.5 * p.kappa_m1 * (1.0 - phi);
}

double tau_of(double phi, const ModelParams& p) {
  const double k1 = p.phase_dependent_kappa ? p.kappa_1 : p.kappa;
  const double km1 = p.phase_dependent_kappa ? p.kappa_m1 : p.kappa;
  return km1 * p.tau_over_kappa_m1 * h_cut(-phi) + k1 * p.tau_over_kappa_1 * h_cut(phi);
}

double eta_of(double phi, const ModelParams& p) {
  return p.eta_m1 * h_cut(-phi) + p.eta_1 * h_cut(phi);
}

double mobility_of(double phi, const ModelParams& p) {
  const double h = h_cut(phi);
  return 2.0 * h * h + p.m0;
}

Coefficients coefficients(double phi, const ModelParams& p) {
  return {mobility_of(phi, p), p.n0, eta_of(phi, p), tau_of(phi, p), kappa_of(phi, p)};
}

double gamma_phi(double phi, double sigma, const Sym2& b, const ModelParams& p, double kappa) {
  return h_cut(1.1 * phi) * (p.P * g_cut(sigma) * f_stress(b, kappa) - p.A_apop);
}

double gamma_phi(double phi, double sigma, const Sym2& b, const ModelParams& p) {
  return gamma_phi(phi, sigma, b, p, kappa_of(phi, p));
}

double gamma_phi_dphi(double phi, double sigma, const Sym2& b, const ModelParams& p,
                      double kappa) {
  const double f = f_stress(b, kappa);
  double d = 1.1 * h_cut_prime(1.1 * phi) * (p.P * g_cut(sigma) * f - p.A_apop);
  if (p.phase_dependent_kappa) {
    const double n2 = std::pow((b - Sym2::identity()).norm(), 2);
    const double df_dk = -kappa * n2 * f * f * f;
    d += h_cut(1.1 * phi) * p.P * g_cut(sigma) * df_dk * 0.5 * (p.kappa_1 - p.kappa_m1);
  }
  return d;
}

double gamma_sigma(double phi, double sigma, const ModelParams& p) {
  return p.C * h_cut(phi) * g_cut(sigma);
}

double gamma_B(double phi, double sigma, const ModelParams& p) {
  return p.growth_source ? p.G * g_cut(sigma) * h_cut(phi) : 0.0;
}

Sym2 State::B_at(int vertex) const {
  const int n = static_cast<int>(phi.size());
  return {B[vertex], B[n + vertex], B[2 * n + vertex]};
}

void State::set_B(int vertex, const Sym2& b) {
  const int n = static_cast<int>(phi.size());
  B[vertex] = b.xx;
  B[n + vertex] = b.xy;
  B[2 * n + vertex] = b.yy;
}

Energy discrete_energy(const State& s, const Mesh& mesh, const EdgeTable& edges,
                       const ModelParams& p) {
  const int nv = mesh.num_vertices();
  if (s.phi.size() != nv || s.sigma.size() != nv || s.B.size() != 3 * nv) {
    throw InvalidState("energy: field sizes do not match the mesh");
  }
  const LumpedMass lm = lumped_mass(mesh);
  Energy e;
  for (int i = 0; i < nv; ++i) {
    const double w = lm.weights[i];
    const double ph = s.phi[i];
    const double sg = s.sigma[i];
    e.psi += w * p.A() * psi(ph, p.potential);
    e.sigma += w * 0.5 * p.chi_sigma * sg * sg;
    e.chem += w * p.chi_phi * sg * (1.0 - ph);
    const Sym2 b = s.B_at(i);
    if (min_eigenvalue(b) > 0.0) {
      e.elastic += w * kappa_of(ph, p) * elastic_trace_energy(b);
    } else {
      e.finite = false;
    }
  }
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Element el = element(mesh, t);
    const Vec2 g = s.phi[tri[0]] * el.grad[0] + s.phi[tri[1]] * el.grad[1] + s.phi[tri[2]] * el.grad[2];
    e.grad += 0.5 * p.B() * el.area * g.squaredNorm();
  }
  if (s.v.size() > 0) {
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const double a = mesh.signed_area(t);
      for (const auto& q : quadrature_deg4()) {
        e.kin += 0.5 * q.weight * a * eval_p2_vector(mesh, edges, s.v, t, q.lambda).squaredNorm();
      }
    }
  }
  if (!e.finite) e.elastic = std::numeric_limits<double>::infinity();
  e.total = e.psi + e.grad + e.sigma + e.chem + e.kin + e.elastic;
  return e;
}

namespace {

double scan_R0(const ModelParams& p) {
  // the ratio is monotone between kinks of the cut-offs, so the kink lattice suffices
  std::vector<double> phis{-3.0, -1.0, -1.0 / 1.1, 0.0, 1.0 / 1.1, 1.0, 3.0};
  std::vector<double> sigmas{-3.0, 0.0, 1.0, 3.0};
  for (int k = -300; k <= 300; ++k) {
    phis.push_back(0.01 * k);
    sigmas.push_back(0.01 * k);
  }
  double r = 0.0;
  const Sym2 I = Sym2::identity();
  for (double ph : phis) {
    for (double sg : sigmas) {
      const double num = std::abs(gamma_phi(ph, sg, I, p)) + std::abs(gamma_sigma(ph, sg, p));
      r = std::max(r, num / (1.0 + std::abs(ph) + std::abs(sg)));
    }
  }
  return r * (1.0 + 1e-12);
}

double scan_R2(Potential kind, double R1) {
  double r = 0.0;
  for (int k = -100000; k <= 100000; ++k) {
    const double t = 1e-3 * k;
    r = std::max(r, R1 * t * t - psi(t, kind));
  }
  return r;
}

double scan_R3(Potential kind) {
  double r = 0.0;
  for (int k = -100000; k <= 100000; ++k) {
    const double t = 1e-3 * k;
    const double d = std::max(std::abs(psi1_prime(t, kind)), std::abs(psi2_prime(t, kind)));
    r = std::max(r, d / (1.0 + std::abs(t)));
  }
  return r;
}

}  // namespace

StabilityConstants stability_constants(const ModelParams& p, double h_min, double c_star,
                                       double C_tr) {
  StabilityConstants sc;
  sc.R0 = scan_R0(p);
  sc.R1 = 0.5;
  sc.R2 = scan_R2(p.potential, sc.R1);
  sc.R3 = scan_R3(p.potential);
  const double A = p.A();
  const double B = p.B();
  const double eta0 = std::min(p.eta_1, p.eta_m1);
  const double kmax = p.phase_dependent_kappa ? std::max(p.kappa_1, p.kappa_m1) : p.kappa;
  const double tau1 = std::max(tau_of(1.0, p), tau_of(-1.0, p));
  const double chi_ratio = p.chi_phi * p.chi_phi / (2.0 * p.chi_sigma) + 1.0;
  auto& c = sc.c;
  c[0] = p.m0 / 2;
  c[1] = p.n0 * p.chi_sigma * p.chi_sigma / 2;
  c[2] = p.K * p.chi_sigma / 4;
  c[3] = 2 * eta0;
  c[4] = kmax * kmax / (2 * tau1);
  c[5] = 3 * sc.R0 * sc.R0 + 1.5 * p.chi_sigma * p.chi_sigma + 4 * p.chi_phi * p.chi_phi;
  c[6] = 4 * A * A * sc.R3 * sc.R3;
  c[7] = c[6] + 3 * sc.R0 * sc.R0 + 1.5 * p.chi_phi * p.chi_phi + p.K * C_tr * C_tr * chi_ratio;
  c[8] = 2 * B * B / p.m0 + p.K * C_tr * C_tr * chi_ratio + p.n0 * p.chi_phi * p.chi_phi;
  sc.a43_margin = A * sc.R1 - 4 * p.chi_phi * p.chi_phi / p.chi_sigma;
  sc.dt_star = sc.a43_margin > 0
                   ? std::min({B / (2 * c[8]), p.chi_sigma / (4 * c[5]), sc.a43_margin / c[7]})
                   : 0.0;
  sc.cfl_threshold = c_star * p.alpha * p.alpha * h_min * h_min;
  return sc;
}

double dt_star(const ModelParams& p, const StabilityConstants& sc) {
  const double margin = p.A() * sc.R1 - 4 * p.chi_phi * p.chi_phi / p.chi_sigma;
  if (!(margin > 0)) {
    std::ostringstream os;
    os << "A4_3 violated: A*R1 - 4 chi_phi^2/chi_sigma = " << margin;
    throw InvalidConfig(os.str());
  }
  return std::min({p.B() / (2 * sc.c[8]), p.chi_sigma / (4 * sc.c[5]), margin / sc.c[7]});
}

bool ValidationReport::ok() const {
  return std::all_of(items.begin(), items.end(), [](const CheckItem& c) { return c.pass || !c.hard; });
}

std::string ValidationReport::text() const {
  std::ostringstream os;
  os.precision(6);
  for (const auto& c : items) {
    os << (c.pass ? "PASS " : (c.hard ? "FAIL " : "WARN ")) << c.name << "  margin=" << c.margin;
    if (!c.detail.empty()) os << "  " << c.detail;
    os << '\n';
  }
  os << "R0=" << constants.R0 << " R1=" << constants.R1 << " R2=" << constants.R2
     << " R3=" << constants.R3 << " dt*=" << constants.dt_star
     << " cfl=" << constants.cfl_threshold << '\n';
  os << (ok() ? "config valid\n" : "config REJECTED\n");
  return os.str();
}

ValidationReport validate_params(const ModelParams& p, const ValidationOptions& opt) {
  ValidationReport r;
  auto add = [&](std::string name, double margin, bool hard, std::string detail = {}) {
    r.items.push_back({std::move(name), margin > 0, hard, margin, std::move(detail)});
  };
  add("A1 dt>0", p.dt, true);
  add("A1 t_end>0", p.t_end, true);
  add("A3 A>0", p.A(), true);
  add("A3 B>0", p.B(), true);
  add("A3 chi_sigma>0", p.chi_sigma, true);
  add("A3 K>0", p.K, true);
  add("A3 alpha>0", p.alpha, true);
  add("A3 chi_phi>=0", p.chi_phi + 1e-300, true);
  if (p.phase_dependent_kappa) {
    add("A3 kappa_1>0", p.kappa_1, true, "phase-dependent kappa relaxes the constant-kappa assumption");
    add("A3 kappa_-1>0", p.kappa_m1, true);
  } else {
    add("A3 kappa>0", p.kappa, true);
  }
  // coefficient bounds over the cut-off range phi in [-1, 1]
  double m_lo = 1e300, eta_lo = 1e300, tau_lo = 1e300;
  for (int k = -100; k <= 100; ++k) {
    const Coefficients c = coefficients(0.01 * k, p);
    m_lo = std::min(m_lo, c.m);
    eta_lo = std::min(eta_lo, c.eta);
    tau_lo = std::min(tau_lo, c.tau);
  }
  add("A3 mobility m lower bound", m_lo, true);
  add("A3 mobility n lower bound", p.n0, true);
  add("A3 viscosity lower bound", eta_lo, true);
  add("A3 relaxation time lower bound", tau_lo, true);

  r.constants = stability_constants(p, opt.h_min, opt.c_star, opt.C_tr);
  const auto& sc = r.constants;
  add("A2 source growth R0 finite", std::isfinite(sc.R0) ? 1.0 : -1.0, true);
  const bool growth_ok = sc.R3 < 1e3;
  add("A4 potential growth R3", growth_ok ? 1.0 / sc.R3 : -sc.R3, false,
      growth_ok ? "" : "quartic derivative is not linearly bounded");
  add("A4_3 A*R1 > 4 chi_phi^2/chi_sigma", sc.a43_margin, true);
  if (sc.a43_margin > 0) {
    add("dt < dt*", sc.dt_star - p.dt, opt.enforce_dt_star,
        opt.enforce_dt_star ? "" : "advisory");
  }
  add("CFL dt <= c* alpha^2 h_min^2", sc.cfl_threshold - p.dt + (p.dt == sc.cfl_threshold ? 1e-300 : 0),
      opt.enforce_cfl, opt.enforce_cfl ? "" : "advisory");
  return r;
}

}  // namespace vech
