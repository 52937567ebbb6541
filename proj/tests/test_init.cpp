#include "helpers.hpp"
#include "vech/init.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace vech;
using namespace vech::testing;

namespace {

const LinearConfig kLin{KrylovKind::GMRES, PrecondKind::LU, 1e-12, 1e-14, 500, 60};

std::vector<int> clamp_state(const Vec& sigma) {
  std::vector<int> c(sigma.size());
  for (int i = 0; i < sigma.size(); ++i) c[i] = sigma[i] > 1.0 ? 2 : (sigma[i] >= 0.0 ? 1 : 0);
  return c;
}

Discretization refined_disc(int coarse, int fine) {
  auto h = std::make_shared<MeshHierarchy>(Box{}, coarse);
  const InitialSpec init;
  const auto phi0 = phi0_function(init, 0.01);
  for (int pass = 0; pass < 2; ++pass) {
    const Vec phi = make_phi0(*h->mesh(), init, 0.01);
    h->adapt_to_band(std::span<const double>(phi.data(), phi.size()), RefinementSpec{coarse, fine, 0.075},
                     phi0);
  }
  return Discretization(h->mesh());
}

}  // namespace

TEST(Init, TumourCentreAndFarField) {
  const auto phi0 = phi0_function(InitialSpec{}, 0.01);
  EXPECT_NEAR(phi0(Vec2(0, 0)), 1.0, 1e-10);
  EXPECT_NEAR(phi0(Vec2(5, 0)), -1.0, 1e-10);
  EXPECT_NEAR(phi0(Vec2(0, -5)), -1.0, 1e-10);
  EXPECT_LT(phi0(Vec2(5, 5)), 0.0);
}

TEST(Init, LevelSetRadius) {
  const auto phi0 = phi0_function(InitialSpec{}, 0.01);
  double lo = 1e9, hi = 0;
  for (int k = 0; k < 360; ++k) {
    const double th = k * std::numbers::pi / 180.0;
    const Vec2 dir(std::cos(th), std::sin(th));
    double a = 0.1, b = 3.0;
    for (int it = 0; it < 80; ++it) {
      const double m = 0.5 * (a + b);
      (phi0(m * dir) > 0 ? a : b) = m;
    }
    EXPECT_NEAR(a, 5.0 / 12.0 * (2.0 + 0.2 * std::cos(2 * th)), 1e-12);
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  EXPECT_NEAR(lo, 0.75, 1e-12);
  EXPECT_NEAR(hi, 11.0 / 12.0, 1e-12);
}

TEST(Init, InterpolatesAtVertices) {
  const Discretization d = make_disc(8);
  const InitialSpec spec;
  const Vec phi = make_phi0(*d.mesh, spec, 0.01);
  const auto f = phi0_function(spec, 0.01);
  for (int i = 0; i < d.nv; ++i) EXPECT_EQ(phi[i], f(d.mesh->vertices[i]));
}

TEST(Init, QuasiStaticWithoutSourcesIsConstant) {
  const Discretization d = make_disc(6);
  ModelParams p;
  p.C = 0.0;
  p.chi_phi = 0.0;
  const Vec phi = make_phi0(*d.mesh, InitialSpec{}, p.epsilon);
  const Vec sigma = make_sigma0_quasistatic(d, phi, p, kLin);
  EXPECT_LE((sigma.array() - 1.0).abs().maxCoeff(), 1e-10);
}

TEST(Init, QuasiStaticNutrientDepressedInTumour) {
  const Discretization d = refined_disc(8, 64);
  const ModelParams p;
  const Vec phi = make_phi0(*d.mesh, InitialSpec{}, p.epsilon);
  const Vec sigma = make_sigma0_quasistatic(d, phi, p, kLin);
  double tumour_min = 1e9, boundary_max = -1e9;
  for (int i = 0; i < d.nv; ++i) {
    if (phi[i] > 0.9) tumour_min = std::min(tumour_min, sigma[i]);
    if (d.lumped.boundary_weights[i] > 0) boundary_max = std::max(boundary_max, sigma[i]);
  }
  EXPECT_LT(tumour_min, boundary_max);
  EXPECT_NEAR(boundary_max, 1.0, 1e-2);

  const SystemBlock blk = assemble_nutrient_quasistatic(d, p, phi, clamp_state(sigma));
  EXPECT_LE((blk.op * sigma - blk.rhs).norm(), 1e-9 * blk.rhs.norm());
}

TEST(Init, NutrientSteadyStateIsQuasiStatic) {
  const Discretization d = make_disc(6);
  ModelParams p;
  p.dt = 100.0;
  const Vec phi = make_phi0(*d.mesh, InitialSpec{}, p.epsilon);
  const Vec target = make_sigma0_quasistatic(d, phi, p, kLin);
  State s = uniform_state(d, 0.0, 1.0);
  s.phi = phi;
  for (int n = 0; n < 200; ++n) {
    const SystemBlock blk = assemble_nutrient(d, p, sweep_from(s));
    Vec x = s.sigma;
    krylov_solve(blk.op, blk.rhs, x, kLin);
    s.sigma = x;
  }
  const SystemBlock qs = assemble_nutrient_quasistatic(d, p, phi, clamp_state(s.sigma));
  EXPECT_LE((qs.op * s.sigma - qs.rhs).norm(), 1e-9 * qs.rhs.norm());
  EXPECT_LE((s.sigma - target).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Init, ProjectionsOfConstants) {
  const Discretization d = make_disc(6);
  InitialSpec spec;
  spec.sigma0_value = 0.8;
  const ProjectedInitials pi = make_projected_initials(d, spec, 1e-3, kLin);
  EXPECT_LE(sigma_projection_residual(d, pi.sigma, 0.8, 1e-3), 1e-12);
  EXPECT_LE(pi.v.cwiseAbs().maxCoeff(), 1e-14);
  for (int i = 0; i < d.nv; ++i) {
    const Sym2 b{pi.B[i], pi.B[d.nv + i], pi.B[2 * d.nv + i]};
    EXPECT_NEAR(b.xx, 1.0, 1e-12);
    EXPECT_NEAR(b.xy, 0.0, 1e-12);
    EXPECT_NEAR(min_eigenvalue(b), 1.0, 1e-12);
  }
}

TEST(Init, ProjectedBStaysPositiveDefinite) {
  const Discretization d = make_disc(6);
  InitialSpec spec;
  spec.B0 = Sym2{2.0, 0.5, 0.4};
  const ProjectedInitials pi = make_projected_initials(d, spec, 0.1, kLin);
  for (int i = 0; i < d.nv; ++i) {
    EXPECT_GT(min_eigenvalue(Sym2{pi.B[i], pi.B[d.nv + i], pi.B[2 * d.nv + i]}), 0.0);
  }
}

TEST(Init, InitialStateIsConsistent) {
  const Discretization d = refined_disc(8, 32);
  const ModelParams p;
  const State s = make_initial_state(d, InitialSpec{}, p, kLin);
  EXPECT_EQ(s.phi.size(), d.nv);
  EXPECT_EQ(s.v.size(), 2 * d.np2);
  EXPECT_EQ(s.B.size(), 3 * d.nv);
  EXPECT_EQ(s.v.norm(), 0.0);
  EXPECT_TRUE(s.mu.allFinite());
  EXPECT_TRUE(s.sigma.allFinite());
  for (int i = 0; i < d.nv; ++i) EXPECT_EQ(min_eigenvalue(s.B_at(i)), 1.0);
  const Energy e = discrete_energy(s, *d.mesh, d.edges, p);
  EXPECT_TRUE(e.finite);
  EXPECT_TRUE(std::isfinite(e.total));
}
