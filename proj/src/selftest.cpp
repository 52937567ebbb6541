#include "vech/selftest.hpp"

#include "vech/errors.hpp"
#include "vech/sim.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace vech {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Sym2 random_sym(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), e(-2.0, 1.5);
  const double scale = std::pow(10.0, e(rng));
  return {scale * u(rng), scale * u(rng), scale * u(rng)};
}

double grad_product(const Mesh& mesh, const Vec& q, const Vec& z) {
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Element e = element(mesh, t);
    Vec2 gq = Vec2::Zero(), gz = Vec2::Zero();
    for (int i = 0; i < 3; ++i) {
      gq += q[tri[i]] * e.grad[i];
      gz += z[tri[i]] * e.grad[i];
    }
    s += e.area * gq.dot(gz);
  }
  return s;
}

Vec2 quad_point(const Mesh& mesh, int t, const std::array<double, 3>& l) {
  const auto& tri = mesh.triangles[t];
  return l[0] * mesh.vertices[tri[0]] + l[1] * mesh.vertices[tri[1]] +
         l[2] * mesh.vertices[tri[2]];
}

State blank_state(const Discretization& d) {
  State s;
  s.phi = Vec::Zero(d.nv);
  s.mu = Vec::Zero(d.nv);
  s.sigma = Vec::Zero(d.nv);
  s.p = Vec::Zero(d.nv);
  s.v = Vec::Zero(2 * d.np2);
  s.B = Vec::Zero(3 * d.nv);
  s.B.head(d.nv).setOnes();
  s.B.tail(d.nv).setOnes();
  return s;
}

std::vector<std::shared_ptr<const Mesh>> graded_meshes() {
  // macro mesh plus two locally refined meshes with hanging-node free closure
  std::vector<std::shared_ptr<const Mesh>> out;
  const Box box;
  out.push_back(std::make_shared<Mesh>(build_macro_mesh(box, 4)));
  for (int fine : {16, 64}) {
    MeshHierarchy h(box, 4);
    std::vector<int> marked;
    const Mesh& m = *h.mesh();
    for (int t = 0; t < m.num_triangles(); ++t) {
      const Vec2 c = quad_point(m, t, {1.0 / 3, 1.0 / 3, 1.0 / 3});
      if (c.norm() < 2.5) marked.push_back(t);
    }
    h.refine_to_indicator(marked, RefinementSpec{4, fine, 0.075});
    out.push_back(h.mesh());
  }
  return out;
}

}  // namespace

std::string format_result(const CheckResult& r) {
  return fmt("[%s] %2d %-28s %s (%.1f s)", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
             r.detail.c_str(), r.seconds);
}

CheckResult check_regularization_lemma(int samples, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r{1, "matrix regularization", true, "", 0};
  std::mt19937_64 rng(seed);
  std::array<double, 8> worst;
  worst.fill(std::numeric_limits<double>::infinity());
  long failures = 0;
  for (double delta : {0.5, 0.25, 0.01}) {
    for (int k = 0; k < samples; ++k) {
      const Sym2 a = random_sym(rng), b = random_sym(rng);
      const RegularizationReport rep = regularization_check(a, b, delta, 1e-10);
      for (int j = 0; j < 8; ++j) worst[j] = std::min(worst[j], rep.slack[j]);
      if (!rep.all()) ++failures;
    }
  }
  const double secs = since(t0);
  r.pass = failures == 0 && secs < 10.0;
  r.detail = fmt("%ld failures in %d pairs; max defect (a) %.2e, min slack (b)-(h) %.2e", failures,
                 3 * samples, -worst[0],
                 *std::min_element(worst.begin() + 1, worst.end()));
  r.seconds = secs;
  return r;
}

CheckResult check_convex_splitting(int samples, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r{2, "convex splitting", true, "", 0};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (Potential kind : {Potential::Modified, Potential::Quartic}) {
    for (int k = 0; k < samples; ++k) {
      const double a = u(rng), b = u(rng);
      const double lhs = (psi1_prime(a, kind) + psi2_prime(b, kind)) * (a - b);
      const double rhs = psi(a, kind) - psi(b, kind);
      worst = std::max(worst, rhs - lhs);
    }
  }
  const double secs = since(t0);
  r.pass = worst <= 1e-12 && secs < 1.0;
  r.detail = fmt("max violation %.2e over %d pairs per potential", worst, samples);
  r.seconds = secs;
  return r;
}

CheckResult check_mass_lumping(int fields, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r{3, "mass lumping", true, "", 0};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  long violations = 0;
  double worst_ratio = 0.0;
  for (const auto& mesh : graded_meshes()) {
    const LumpedMass lm = lumped_mass(*mesh);
    for (int k = 0; k < fields; ++k) {
      Vec q(mesh->num_vertices());
      for (auto& x : q) x = u(rng);
      const double l2 = l2_norm_p1(*mesh, q);
      const double lumped = std::sqrt(lumped_dot(lm, q, q));
      worst_ratio = std::max(worst_ratio, l2 / lumped);
      if (l2 > lumped * (1.0 + 1e-14)) ++violations;
    }
  }
  // lumping error order for smooth fields on uniform refinements
  const Box box;
  auto qf = [](const Vec2& x) { return std::sin(0.6 * x.x() + 0.3) * std::cos(0.4 * x.y()); };
  auto zf = [](const Vec2& x) { return std::cos(0.5 * x.x()) * std::exp(0.2 * x.y()); };
  std::vector<double> err;
  for (int n : {8, 16, 32, 64}) {
    const Mesh mesh = build_macro_mesh(box, n);
    const Vec q = nodal_interpolate(mesh, qf), z = nodal_interpolate(mesh, zf);
    const SparseOperator M = assemble_p1_mass(mesh);
    const LumpedMass lm = lumped_mass(mesh);
    err.push_back(std::abs(lumped_dot(lm, q, z) - q.dot(M * z)));
  }
  double min_rate = std::numeric_limits<double>::infinity();
  std::string rates;
  for (std::size_t k = 1; k < err.size(); ++k) {
    const double rate = std::log2(err[k - 1] / err[k]);
    min_rate = std::min(min_rate, rate);
    rates += fmt("%s%.2f", k > 1 ? "," : "", rate);
  }
  r.pass = violations == 0 && min_rate >= 1.9;
  r.detail = fmt("%ld violations, max ||q||/||q||_h %.6f; lumping error rates %s", violations,
                 worst_ratio, rates.c_str());
  r.seconds = since(t0);
  return r;
}

CheckResult check_discrete_laplacian(int pairs, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r{4, "discrete laplacian", true, "", 0};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_mean = 0.0, worst_id = 0.0;
  for (const auto& mesh : graded_meshes()) {
    const LumpedMass lm = lumped_mass(*mesh);
    const int nv = mesh->num_vertices();
    for (int k = 0; k < pairs; ++k) {
      Vec q(nv), z(nv);
      for (int i = 0; i < nv; ++i) {
        q[i] = u(rng);
        z[i] = q[i] + 0.5 * u(rng);
      }
      const Vec lap = discrete_laplacian(*mesh, q);
      const double mean = lumped_dot(lm, lap, Vec::Ones(nv));
      const double scale = lm.weights.dot(lap.cwiseAbs());
      worst_mean = std::max(worst_mean, std::abs(mean) / scale);
      const double lhs = lumped_dot(lm, lap, z);
      const double rhs = -grad_product(*mesh, q, z);
      worst_id = std::max(worst_id, std::abs(lhs - rhs) / std::abs(rhs));
    }
  }
  r.pass = worst_mean <= 1e-12 && worst_id <= 1e-12;
  r.detail = fmt("relative lumped mean %.2e, identity defect %.2e", worst_mean, worst_id);
  r.seconds = since(t0);
  return r;
}

CheckResult check_ch_dissipation(int steps, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r{5, "CH energy dissipation", true, "", 0};
  ModelParams p;
  p.P = 0.0;
  p.A_apop = 0.0;
  p.chi_phi = 0.0;
  p.dt = 1e-3;
  p.potential = Potential::Modified;
  const Discretization d(std::make_shared<Mesh>(build_macro_mesh(Box{}, 32)));
  State s = blank_state(d);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), ph(0.0, 2.0 * std::numbers::pi);
  struct Mode {
    double a, kx, ky, th;
  };
  std::vector<Mode> modes;
  const double k0 = 2.0 * std::numbers::pi / 10.0;
  for (int k = 0; k < 6; ++k) {
    modes.push_back({u(rng), k0 * std::round(3 * u(rng)), k0 * std::round(3 * u(rng)), ph(rng)});
  }
  s.phi = nodal_interpolate(*d.mesh, [&](const Vec2& x) {
    double f = 0.0;
    for (const auto& m : modes) f += m.a * std::cos(m.kx * x.x() + m.ky * x.y() + m.th);
    return 0.8 * std::tanh(f);
  });
  SolverConfig cfg;
  const StepFlags flags{true, true, true};
  int bad_total = 0, bad_ch = 0;
  double worst_total = -1e300, worst_ch = -1e300;
  Energy prev_e = discrete_energy(s, *d.mesh, d.edges, p);
  for (int n = 0; n < steps; ++n) {
    StepReport rep;
    s = advance_step(s, d, p, cfg, flags, rep);
    const Energy e = discrete_energy(s, *d.mesh, d.edges, p);
    const double inc_total = (e.total - prev_e.total) / std::abs(prev_e.total);
    const double ch_prev = prev_e.psi + prev_e.grad, ch = e.psi + e.grad;
    const double inc_ch = (ch - ch_prev) / std::abs(ch_prev);
    worst_total = std::max(worst_total, inc_total);
    worst_ch = std::max(worst_ch, inc_ch);
    if (inc_total > 1e-9) ++bad_total;
    if (inc_ch > 1e-9) ++bad_ch;
    prev_e = e;
  }
  const double secs = since(t0);
  r.pass = bad_total == 0 && bad_ch == 0 && secs < 60.0;
  r.detail = fmt("%d steps; max relative increase F_h %.2e, CH part %.2e", steps, worst_total,
                 worst_ch);
  r.seconds = secs;
  return r;
}

CheckResult check_oldroyd_oracle(int steps) {
  const auto t0 = Clock::now();
  CheckResult r{6, "Oldroyd nodewise oracle", true, "", 0};
  const Discretization d(std::make_shared<Mesh>(build_macro_mesh(Box{}, 2)));
  double worst = 0.0;
  for (double G : {0.0, 0.5}) {
    ModelParams p;
    p.P = 0.0;
    p.A_apop = 0.0;
    p.dt = 1e-2;
    p.tau_over_kappa_1 = 0.5;
    p.tau_over_kappa_m1 = 2.0;
    p.G = G;
    p.growth_source = G > 0;
    const double phi = 0.3, sigma = 0.7;
    State s = blank_state(d);
    s.phi.setConstant(phi);
    s.sigma.setConstant(sigma);
    s.mu.setConstant(p.A() * psi_prime(phi, p.potential) - p.chi_phi * sigma);
    const Sym2 b0{1.5, 0.3, 0.8};
    for (int i = 0; i < d.nv; ++i) s.set_B(i, b0);
    SolverConfig cfg;
    cfg.oldroyd = LinearConfig{KrylovKind::BiCGSTAB, PrecondKind::LU, 1e-15, 1e-15, 200, 60};
    const StepFlags flags{true, true, false};
    // scalar recurrence
    const double hp = std::clamp((1.0 + phi) / 2.0, 0.0, 1.0);
    const double hm = std::clamp((1.0 - phi) / 2.0, 0.0, 1.0);
    const double tau = p.kappa * p.tau_over_kappa_m1 * hm + p.kappa * p.tau_over_kappa_1 * hp;
    const double rate = p.kappa / tau;
    const double gamma = G * std::clamp(sigma, 0.0, 1.0) * hp;
    Sym2 b = b0;
    for (int n = 0; n < steps; ++n) {
      StepReport rep;
      s = advance_step(s, d, p, cfg, flags, rep);
      b = (b + Sym2::identity() * (p.dt * rate)) * (1.0 / (1.0 + p.dt * (rate + gamma)));
      for (int i = 0; i < d.nv; ++i) worst = std::max(worst, (s.B_at(i) - b).norm());
    }
  }
  r.pass = worst <= 1e-12;
  r.detail = fmt("max deviation from the scalar recurrence %.2e (G = 0 and 0.5)", worst);
  r.seconds = since(t0);
  return r;
}

CheckResult check_newton_jacobian(std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r{7, "CH Jacobian", true, "", 0};
  const Discretization d(std::make_shared<Mesh>(build_macro_mesh(Box{}, 1)));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (bool variant : {false, true}) {
    ModelParams p;
    p.dt = 1e-3;
    p.phase_dependent_kappa = variant;
    if (variant) {
      p.kappa_1 = 1.0;
      p.kappa_m1 = 5.0;
    }
    State prev = blank_state(d);
    for (int i = 0; i < d.nv; ++i) {
      prev.phi[i] = 0.8 * u(rng);
      prev.sigma[i] = 0.5 + 0.4 * u(rng);
      prev.set_B(i, Sym2{1.0 + 0.3 * u(rng), 0.2 * u(rng), 1.0 + 0.3 * u(rng)});
    }
    for (int k = 0; k < d.np2; ++k) {
      if (d.p2_boundary[k]) continue;
      prev.v[k] = 0.1 * u(rng);
      prev.v[d.np2 + k] = 0.1 * u(rng);
    }
    SweepFields f;
    f.prev = &prev;
    f.phi = prev.phi;
    f.mu = prev.mu;
    f.sigma = prev.sigma;
    f.v = prev.v;
    f.B = prev.B;
    const CHProblem ch(d, p, f);
    Vec x(2 * d.nv);
    for (int i = 0; i < d.nv; ++i) {
      x[i] = 0.8 * u(rng);
      x[d.nv + i] = u(rng);
    }
    const Eigen::MatrixXd J = Eigen::MatrixXd(ch.jacobian(x));
    const Eigen::MatrixXd Jfd =
        finite_difference_jacobian([&](const Vec& y) { return ch.residual(y); }, x, 1e-6);
    worst = std::max(worst, (J - Jfd).norm() / J.norm());
  }
  r.pass = worst <= 1e-6;
  r.detail = fmt("relative Frobenius error vs central differences %.2e", worst);
  r.seconds = since(t0);
  return r;
}

CheckResult check_manufactured_stokes() {
  const auto t0 = Clock::now();
  CheckResult r{8, "manufactured Stokes", true, "", 0};
  const double pi = std::numbers::pi;
  auto f0 = [](double x) { return x * x * (x - 1) * (x - 1); };
  auto f1 = [](double x) { return 2 * x * (x - 1) * (2 * x - 1); };
  auto f2 = [](double x) { return 12 * x * x - 12 * x + 2; };
  auto f3 = [](double x) { return 24 * x - 12; };
  auto u_exact = [&](const Vec2& x) {
    return Vec2(f0(x.x()) * f1(x.y()), -f1(x.x()) * f0(x.y()));
  };
  auto p_exact = [&](const Vec2& x) { return std::cos(pi * x.x()) * std::cos(pi * x.y()); };
  auto force = [&](const Vec2& x) -> Vec2 {
    const double lap1 = f2(x.x()) * f1(x.y()) + f0(x.x()) * f3(x.y());
    const double lap2 = -(f3(x.x()) * f0(x.y()) + f1(x.x()) * f2(x.y()));
    const Vec2 gp(-pi * std::sin(pi * x.x()) * std::cos(pi * x.y()),
                  -pi * std::cos(pi * x.x()) * std::sin(pi * x.y()));
    return Vec2(-lap1, -lap2) + gp;
  };
  ModelParams p;
  SaddleOptions opt;
  opt.body_force = force;
  opt.eta_override = 1.0;
  opt.time_term = false;
  opt.convection = false;
  opt.model_forcing = false;
  const LinearConfig lin{KrylovKind::GMRES, PrecondKind::LU, 1e-12, 1e-14, 500, 60};

  std::vector<double> eu, ep;
  double worst_div = 0.0, worst_mean = 0.0;
  bool div_ok = true;
  for (int n : {4, 8, 16, 32}) {
    const Discretization d(std::make_shared<Mesh>(build_macro_mesh(Box{0, 0, 1, 1}, n)));
    State prev = blank_state(d);
    SweepFields f;
    f.prev = &prev;
    f.phi = prev.phi;
    f.mu = prev.mu;
    f.sigma = prev.sigma;
    f.v = prev.v;
    f.B = prev.B;
    const SystemBlock blk = assemble_saddle(d, p, f, opt);
    Vec x = Vec::Zero(blk.rhs.size());
    const SolveStats st = krylov_solve(blk.op, blk.rhs, x, lin);
    Vec v, pres;
    split_saddle(d, x, v, pres);
    const double tol = std::max(lin.rtol * st.rhs_norm, lin.atol);
    const double div = divergence_residual(d, v);
    worst_div = std::max(worst_div, div / tol);
    if (div > 10.0 * tol) div_ok = false;
    worst_mean = std::max(worst_mean, std::abs(d.lumped.weights.dot(pres)));

    const Mesh& mesh = *d.mesh;
    double pmean = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const Element e = element(mesh, t);
      for (const auto& q : quadrature_deg4()) {
        pmean += q.weight * e.area * eval_p1(mesh, pres, t, q.lambda);
      }
    }
    double su = 0.0, sp = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const Element e = element(mesh, t);
      for (const auto& q : quadrature_deg4()) {
        const Vec2 xq = quad_point(mesh, t, q.lambda);
        const double w = q.weight * e.area;
        su += w * (eval_p2_vector(mesh, d.edges, v, t, q.lambda) - u_exact(xq)).squaredNorm();
        const double dp = eval_p1(mesh, pres, t, q.lambda) - pmean - p_exact(xq);
        sp += w * dp * dp;
      }
    }
    eu.push_back(std::sqrt(su));
    ep.push_back(std::sqrt(sp));
  }
  double ru = 1e300, rp = 1e300;
  std::string rates;
  for (std::size_t k = 1; k < eu.size(); ++k) {
    const double a = std::log2(eu[k - 1] / eu[k]), b = std::log2(ep[k - 1] / ep[k]);
    ru = std::min(ru, a);
    rp = std::min(rp, b);
    rates += fmt("%s%.2f/%.2f", k > 1 ? " " : "", a, b);
  }
  r.pass = ru >= 2.7 && rp >= 1.8 && div_ok && worst_mean <= 1e-12;
  r.detail = fmt("rates v/p %s; div residual <= %.2f x tol; lumped pressure mean %.1e",
                 rates.c_str(), worst_div, worst_mean);
  r.seconds = since(t0);
  return r;
}

CheckResult check_config_validation() {
  const auto t0 = Clock::now();
  CheckResult r{12, "config validation", true, "", 0};
  ValidationOptions opt;
  opt.h_min = 10.0 / 1024.0;
  const ModelParams defaults;
  const ValidationReport good = validate_params(defaults, opt);
  ModelParams bad = defaults;
  // chi_phi^2 >= A R1 chi_sigma / 4 with A = 10, R1 = 1/2, chi_sigma = 500
  bad.chi_phi = std::sqrt(defaults.A() * 0.5 * defaults.chi_sigma / 4.0);
  const ValidationReport rejected = validate_params(bad, opt);
  bool a43_flagged = false;
  for (const auto& it : rejected.items) {
    if (it.name.rfind("A4_3", 0) == 0 && !it.pass && it.hard) a43_flagged = true;
  }
  const double r1 = good.constants.R1;
  const double margin = good.constants.a43_margin;
  r.pass = good.ok() && !rejected.ok() && a43_flagged && std::abs(r1 - 0.5) < 1e-15 &&
           std::abs(margin - 4.2) < 1e-12;
  r.detail = fmt("default set %s (R1 = %.3g, A4_3 margin %.6g); chi_phi = %.4g %s",
                 good.ok() ? "accepted" : "REJECTED", r1, margin, bad.chi_phi,
                 rejected.ok() ? "ACCEPTED" : "rejected by A4_3");
  r.seconds = since(t0);
  return r;
}

namespace {

RunConfig small_run(const std::string& dir, double t_end, int checkpoint_every) {
  RunConfig c;
  c.mesh = RefinementSpec{8, 64, 0.075};
  c.model.dt = 1e-3;
  c.model.t_end = t_end;
  c.output_every = 0;
  c.checkpoint_every = checkpoint_every;
  c.output_dir = dir;
  c.quiet = true;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

CheckResult check_resume_determinism(const std::string& work_dir) {
  const auto t0 = Clock::now();
  CheckResult r{13, "determinism and resume", true, "", 0};
  const fs::path root(work_dir);
  const fs::path a = root / "straight", b = root / "split";
  fs::remove_all(a);
  fs::remove_all(b);
  {
    Simulation sim(small_run(a.string(), 0.02, 10));
    run_to_end(sim);
  }
  {
    Simulation sim(small_run(b.string(), 0.01, 0));
    run_to_end(sim);
  }
  std::ifstream in(b / "checkpoint_000010.vech", std::ios::binary);
  const Checkpoint ckpt = read_checkpoint(in);
  bool refused = false;
  try {
    Simulation::from_checkpoint(ckpt, {"time.dt=0.002", "time.t_end=0.02"}, false);
  } catch (const InvalidConfig&) {
    refused = true;
  }
  {
    Simulation sim = Simulation::from_checkpoint(ckpt, {"time.t_end=0.02"}, false);
    run_to_end(sim);
  }
  const std::string ma = slurp(a / "monitors.csv"), mb = slurp(b / "monitors.csv");
  const auto rows = std::count(ma.begin(), ma.end(), '\n');
  const bool same = !ma.empty() && ma == mb;
  r.pass = same && rows == 22 && refused;
  r.detail = fmt("monitor CSVs %s (%ld lines); dt change %s", same ? "identical" : "DIFFER",
                 static_cast<long>(rows), refused ? "refused" : "NOT refused");
  r.seconds = since(t0);
  return r;
}

namespace {

struct DeskRun {
  std::vector<MonitorRecord> monitors;
  std::shared_ptr<const Mesh> mesh;
  Vec phi;
  double seconds = 0.0;
  bool ok = true;
  std::string error;
};

DeskRun desk_run(const std::string& cfg_path, const DeskOptions& opt,
                 std::vector<std::string> sets, const std::string& name) {
  const auto t0 = Clock::now();
  sets.push_back("mesh.coarse_n=" + std::to_string(opt.coarse_n));
  sets.push_back("mesh.fine_n=" + std::to_string(opt.fine_n));
  sets.push_back(fmt("time.dt=%.17g", opt.dt));
  sets.push_back(fmt("time.t_end=%.17g", opt.t_end));
  sets.push_back("run.output_dir=" + (fs::path(opt.work_dir) / name).string());
  sets.push_back("run.clip_B=0");
  sets.push_back("run.quiet=" + std::string(opt.verbose ? "false" : "true"));
  DeskRun out;
  try {
    Simulation sim(run_config_from(load_config(cfg_path, sets)));
    RunResult res = run_to_end(sim, opt.verbose ? &std::cout : nullptr);
    if (!res.ok) throw InvalidState(res.error);
    std::ifstream mon(fs::path(sim.config().output_dir) / "monitors.csv");
    std::string line;
    std::getline(mon, line);
    while (std::getline(mon, line)) {
      std::stringstream ss(line);
      std::vector<double> vals;
      std::string cell;
      while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
      MonitorRecord m;
      m.t = vals[0];
      m.energy.total = vals[1];
      m.min_eig_B = vals[8];
      m.max_Tel = vals[9];
      m.mass = vals[10];
      m.div_residual = vals[11];
      out.monitors.push_back(m);
    }
    out.mesh = sim.discretization().mesh;
    out.phi = sim.state().phi;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  out.seconds = since(t0);
  return out;
}

}  // namespace

std::vector<CheckResult> check_desk_experiments(const DeskOptions& opt) {
  const fs::path exp(opt.experiments_dir);
  fs::create_directories(opt.work_dir);
  std::vector<CheckResult> out;

  const DeskRun base = desk_run((exp / "baseline.cfg").string(), opt, {}, "baseline");
  const DeskRun frozen =
      desk_run((exp / "baseline.cfg").string(), opt, {"run.freeze_B=true"}, "viscous_twin");
  const ModelParams defaults;

  CheckResult c9{9, "positive definiteness", false, "", base.seconds};
  CheckResult c10{10, "viscous comparison", false, "", base.seconds + frozen.seconds};
  if (!base.ok) {
    c9.detail = c10.detail = "baseline run failed: " + base.error;
  } else {
    double min_eig = std::numeric_limits<double>::infinity();
    double max_tel = 0.0;
    for (const auto& m : base.monitors) {
      min_eig = std::min(min_eig, m.min_eig_B);
      max_tel = std::max(max_tel, m.max_Tel);
    }
    const int nsteps = static_cast<int>(base.monitors.size()) - 1;
    c9.pass = min_eig > 0.0 && base.seconds < 1200.0;
    c9.detail = fmt("%d steps, min vertex eigenvalue of B %.6g", nsteps, min_eig);
    if (!frozen.ok) {
      c10.detail = "frozen-B run failed: " + frozen.error;
    } else {
      // frozen run evaluated at the baseline vertices
      const PointLocator loc(*frozen.mesh);
      const Mesh& m = *base.mesh;
      Vec diff(m.num_vertices());
      for (int i = 0; i < m.num_vertices(); ++i) {
        const auto hit = loc.locate(m.vertices[i]);
        if (!hit) throw InvalidState("desk comparison: vertex outside mesh");
        diff[i] = base.phi[i] - eval_p1(*frozen.mesh, frozen.phi, hit->triangle, hit->barycentric);
      }
      const double rel = l2_norm_p1(m, diff) / l2_norm_p1(m, base.phi);
      const double tel_rel = max_tel / defaults.kappa;
      c10.pass = tel_rel <= 1e-6 && rel <= 1e-3;
      c10.detail = fmt("max|T_el|/kappa %.2e; frozen-B phi L2 difference %.2e relative", tel_rel,
                       rel);
    }
  }
  out.push_back(c9);
  out.push_back(c10);

  CheckResult c11{11, "growth ordering", false, "", 0.0};
  std::vector<double> tel, mass;
  std::string runs, failure;
  for (double G : opt.growth) {
    const DeskRun g = desk_run((exp / "growth_stress.cfg").string(), opt,
                               {fmt("model.G=%.17g", G)}, fmt("growth_G%.2f", G));
    c11.seconds += g.seconds;
    if (!g.ok) {
      failure = fmt("G = %.2f failed: %s", G, g.error.c_str());
      break;
    }
    tel.push_back(g.monitors.back().max_Tel);
    mass.push_back(g.monitors.back().mass);
    runs += fmt("%sG=%.2f: maxTel %.4g mass %.6f", runs.empty() ? "" : "; ", G, tel.back(),
                mass.back());
  }
  if (failure.empty()) {
    bool inc = true, dec = true;
    for (std::size_t k = 1; k < tel.size(); ++k) {
      inc = inc && tel[k] > tel[k - 1];
      dec = dec && mass[k] < mass[k - 1];
    }
    c11.pass = inc && dec;
    c11.detail = runs;
  } else {
    c11.detail = failure;
  }
  out.push_back(c11);
  return out;
}

bool run_selftest(std::ostream& out) {
  bool ok = true;
  auto emit = [&](const CheckResult& r) {
    out << format_result(r) << std::endl;
    ok = ok && r.pass;
  };
  emit(check_regularization_lemma());
  emit(check_convex_splitting());
  emit(check_mass_lumping());
  emit(check_discrete_laplacian());
  emit(check_ch_dissipation());
  emit(check_oldroyd_oracle());
  emit(check_newton_jacobian());
  emit(check_manufactured_stokes());
  emit(check_config_validation());
  const fs::path dir = fs::temp_directory_path() / "vech_selftest";
  emit(check_resume_determinism(dir.string()));
  return ok;
}

}  // namespace vech
