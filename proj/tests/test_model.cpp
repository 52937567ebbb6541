#include "vech/assembly.hpp"
#include "vech/errors.hpp"
#include "vech/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace vech;

namespace {

State uniform_state(const Discretization& d, double phi, double sigma) {
  State s;
  s.phi = Vec::Constant(d.nv, phi);
  s.mu = Vec::Zero(d.nv);
  s.sigma = Vec::Constant(d.nv, sigma);
  s.p = Vec::Zero(d.nv);
  s.v = Vec::Zero(2 * d.np2);
  s.B = Vec::Zero(3 * d.nv);
  for (int i = 0; i < d.nv; ++i) s.set_B(i, Sym2::identity());
  return s;
}

}  // namespace

TEST(Model, PotentialValues) {
  EXPECT_EQ(psi(1.0), 0.0);
  EXPECT_EQ(psi(-1.0), 0.0);
  EXPECT_EQ(psi(0.0), 0.25);
  EXPECT_EQ(psi_prime(0.0), 0.0);
  EXPECT_DOUBLE_EQ(psi(2.0), 1.0);
  EXPECT_DOUBLE_EQ(psi_prime(2.0), 2.0);
  EXPECT_DOUBLE_EQ(psi(-2.0), 1.0);
  EXPECT_DOUBLE_EQ(psi(2.0, Potential::Quartic), 2.25);
}

TEST(Model, SplitSumsToDerivative) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5, 5);
  for (auto kind : {Potential::Modified, Potential::Quartic}) {
    for (int k = 0; k < 10000; ++k) {
      const double t = u(rng);
      EXPECT_EQ(psi1_prime(t, kind) + psi2_prime(t, kind), psi_prime(t, kind));
      EXPECT_GE(psi(t, kind), 0.0);
      EXPECT_GE(psi1_second(t, kind), 0.0);
    }
  }
}

TEST(Model, DerivativeContinuousAtWells) {
  for (double t : {-1.0, 1.0}) {
    EXPECT_NEAR(psi_prime(std::nextafter(t, -5.0)), psi_prime(std::nextafter(t, 5.0)), 1e-14);
    EXPECT_NEAR(psi(std::nextafter(t, -5.0)), psi(std::nextafter(t, 5.0)), 1e-14);
  }
}

TEST(Model, ConvexSplittingInequality) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int k = 0; k < 100000; ++k) {
    const double x = u(rng), y = u(rng);
    EXPECT_GE((psi1_prime(x) + psi2_prime(y)) * (x - y), psi(x) - psi(y) - 1e-12);
  }
}

TEST(Model, QuadraticLowerBound) {
  for (double t = -100.0; t <= 100.0; t += 1e-3) EXPECT_GE(psi(t) - 0.5 * t * t + 1.0, -1e-12);
}

TEST(Model, CutoffFunctions) {
  EXPECT_EQ(h_cut(-1.1), 0.0);
  EXPECT_EQ(h_cut(1.1), 1.0);
  EXPECT_EQ(h_cut(0.0), 0.5);
  EXPECT_EQ(g_cut(-0.2), 0.0);
  EXPECT_EQ(g_cut(1.7), 1.0);
  EXPECT_EQ(f_stress(Sym2::identity(), 1e4), 1.0);
  EXPECT_NEAR(f_stress(Sym2::diag(2, 2), 1.0), 1.0 / std::sqrt(3.0), 1e-15);
}

TEST(Model, SourcesInHealthyPhaseVanish) {
  const ModelParams p;
  EXPECT_EQ(gamma_phi(-1.0, 0.7, Sym2::identity(), p), 0.0);
  EXPECT_EQ(gamma_sigma(-1.0, 0.7, p), 0.0);
}

TEST(Model, SourcesInTumourPhase) {
  ModelParams p;
  EXPECT_DOUBLE_EQ(gamma_phi(1.0, 1.0, Sym2::identity(), p), 2.0);
  EXPECT_DOUBLE_EQ(gamma_sigma(1.0, 1.0, p), 10.0);
  EXPECT_EQ(gamma_B(1.0, 1.0, p), 0.0);
  p.growth_source = true;
  p.G = 0.2;
  EXPECT_DOUBLE_EQ(gamma_B(1.0, 1.0, p), 0.2);
  EXPECT_DOUBLE_EQ(gamma_B(0.0, 0.5, p), 0.05);
  p.A_apop = 0.5;
  EXPECT_DOUBLE_EQ(gamma_phi(1.0, 1.0, Sym2::identity(), p), 1.5);
}

TEST(Model, SourceDerivativeMatchesDifferences) {
  const ModelParams p;
  const Sym2 b{1.1, 0.02, 0.95};
  for (double phi : {-0.7, -0.3, 0.2, 0.6}) {
    const double h = 1e-6;
    const double fd = (gamma_phi(phi + h, 0.8, b, p) - gamma_phi(phi - h, 0.8, b, p)) / (2 * h);
    EXPECT_NEAR(gamma_phi_dphi(phi, 0.8, b, p, p.kappa), fd, 1e-7);
  }
}

TEST(Model, SourcesLinearGrowthAndLipschitz) {
  ModelParams p;
  p.A_apop = 0.3;
  const StabilityConstants sc = stability_constants(p, 10.0 / 256.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5);
  double lip = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const double phi = u(rng), sigma = u(rng);
    const Sym2 b{1 + 0.1 * u(rng), 0.01 * u(rng), 1 + 0.1 * u(rng)};
    const double g = std::abs(gamma_phi(phi, sigma, b, p)) + std::abs(gamma_sigma(phi, sigma, p));
    EXPECT_LE(g, sc.R0 * (1 + std::abs(phi) + std::abs(sigma)) + 1e-12);
    const double phi2 = phi + 1e-3 * u(rng), sigma2 = sigma + 1e-3 * u(rng);
    const double dist = std::abs(phi - phi2) + std::abs(sigma - sigma2);
    if (dist > 0) {
      lip = std::max(lip, std::abs(gamma_sigma(phi, sigma, p) - gamma_sigma(phi2, sigma2, p)) / dist);
      lip = std::max(lip, std::abs(gamma_phi(phi, sigma, b, p) - gamma_phi(phi2, sigma2, b, p)) / dist);
    }
  }
  EXPECT_LT(lip, 100.0);
}

TEST(Model, Coefficients) {
  ModelParams p;
  p.eta_1 = 2000;
  p.eta_m1 = 1500;
  p.tau_over_kappa_1 = 0.01;
  p.tau_over_kappa_m1 = 1.0;
  const Coefficients one = coefficients(1.0, p);
  EXPECT_DOUBLE_EQ(one.m, 2.0 + p.m0);
  EXPECT_DOUBLE_EQ(one.eta, 2000.0);
  EXPECT_DOUBLE_EQ(one.tau, 0.01 * p.kappa);
  EXPECT_DOUBLE_EQ(one.n, p.n0);
  const Coefficients minus = coefficients(-1.0, p);
  EXPECT_EQ(minus.m, 1e-12);
  EXPECT_DOUBLE_EQ(minus.eta, 1500.0);
  EXPECT_DOUBLE_EQ(coefficients(0.0, p).eta, 1750.0);
}

TEST(Model, PhaseDependentKappaEndpoints) {
  ModelParams p;
  p.phase_dependent_kappa = true;
  p.kappa_1 = 1.0;
  p.kappa_m1 = 5.0;
  EXPECT_EQ(kappa_of(1.0, p), 1.0);
  EXPECT_EQ(kappa_of(-1.0, p), 5.0);
  EXPECT_EQ(kappa_of(0.0, p), 3.0);
  p.phase_dependent_kappa = false;
  EXPECT_EQ(kappa_of(0.3, p), p.kappa);
}

TEST(Model, EnergyOfPurePhases) {
  const Discretization d(std::make_shared<const Mesh>(build_macro_mesh(Box{}, 4)));
  const ModelParams p;
  const Energy tumour = discrete_energy(uniform_state(d, 1.0, 0.0), *d.mesh, d.edges, p);
  EXPECT_NEAR(tumour.total, 1e6, 1e-6);
  EXPECT_NEAR(tumour.elastic, 1e6, 1e-6);
  EXPECT_EQ(tumour.psi, 0.0);
  const Energy healthy = discrete_energy(uniform_state(d, -1.0, 0.0), *d.mesh, d.edges, p);
  EXPECT_NEAR(healthy.total, 1e6, 1e-6);
  const Energy fed = discrete_energy(uniform_state(d, 1.0, 1.0), *d.mesh, d.edges, p);
  EXPECT_EQ(fed.chem, 0.0);
  EXPECT_NEAR(fed.sigma, 0.5 * p.chi_sigma * 100.0, 1e-8);
}

TEST(Model, EnergyFlagsIndefiniteB) {
  const Discretization d(std::make_shared<const Mesh>(build_macro_mesh(Box{}, 2)));
  State s = uniform_state(d, 1.0, 0.0);
  s.set_B(3, Sym2::diag(1.0, -0.5));
  const Energy e = discrete_energy(s, *d.mesh, d.edges, ModelParams{});
  EXPECT_FALSE(e.finite);
  EXPECT_TRUE(std::isinf(e.total));
}

TEST(Model, DefaultParametersValidate) {
  const ModelParams p;
  const StabilityConstants sc = stability_constants(p, 10.0 / 1024.0);
  EXPECT_EQ(sc.R1, 0.5);
  EXPECT_NEAR(sc.a43_margin, 4.2, 1e-12);
  EXPECT_GT(dt_star(p, sc), 0.0);
  const ValidationReport r = validate_params(p);
  EXPECT_TRUE(r.ok());
  bool cfl_advisory_failed = false;
  for (const auto& it : r.items) {
    if (it.name.find("CFL") != std::string::npos) cfl_advisory_failed = !it.pass && !it.hard;
  }
  EXPECT_TRUE(cfl_advisory_failed);
  EXPECT_NE(r.text().find("A4_3"), std::string::npos);
}

TEST(Model, NoChemotaxisKeepsThirdBoundPositive) {
  ModelParams p;
  p.chi_phi = 0.0;
  const StabilityConstants sc = stability_constants(p, 0.01);
  EXPECT_NEAR(sc.a43_margin, p.A() * sc.R1, 1e-14);
  EXPECT_GT(dt_star(p, sc), 0.0);
}

TEST(Model, StrongChemotaxisRejected) {
  ModelParams p;
  p.chi_phi = 100.0;
  p.chi_sigma = 10.0;
  const StabilityConstants sc = stability_constants(p, 0.01);
  EXPECT_LT(sc.a43_margin, 0.0);
  EXPECT_THROW(dt_star(p, sc), InvalidConfig);
  EXPECT_FALSE(validate_params(p).ok());
}
