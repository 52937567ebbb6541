#include "helpers.hpp"
#include "vech/errors.hpp"
#include "vech/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace vech;
using namespace vech::testing;

namespace {

Vec solve(const SystemBlock& blk, Vec guess = {}) {
  LinearConfig lin{KrylovKind::GMRES, PrecondKind::LU, 1e-13, 1e-15, 500, 60};
  if (guess.size() != blk.rhs.size()) guess = Vec::Zero(blk.rhs.size());
  krylov_solve(blk.op, blk.rhs, guess, lin);
  return guess;
}

}  // namespace

TEST(Assembly, StationaryPurePhaseSolvesCH) {
  const Discretization d = make_disc(3);
  const ModelParams p;
  const State s = uniform_state(d, 1.0, 0.0);
  const CHProblem ch(d, p, sweep_from(s));
  Vec x(2 * d.nv);
  x << s.phi, Vec::Zero(d.nv);
  EXPECT_LE(ch.residual(x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Assembly, LumpedTimeTermPerVertex) {
  const Discretization d = make_disc(1);
  ModelParams p;
  p.P = 0.0;
  p.dt = 0.01;
  const State s = uniform_state(d, 0.3, 0.0);
  const CHProblem ch(d, p, sweep_from(s));
  Vec x0(2 * d.nv), x1;
  x0 << s.phi, Vec::Zero(d.nv);
  x1 = x0;
  x1[2] += 0.1;
  const Vec dr = ch.residual(x1) - ch.residual(x0);
  for (int i = 0; i < d.nv; ++i) {
    EXPECT_NEAR(dr[i], i == 2 ? d.lumped.weights[i] * 0.1 / p.dt : 0.0, 1e-12);
  }
}

TEST(Assembly, JacobianMatchesFiniteDifferences) {
  const Discretization d = make_disc(1);
  ModelParams p;
  p.A_apop = 0.2;
  std::mt19937_64 rng(9);
  State s = uniform_state(d, 0.0, 0.0);
  s.phi = random_vec(d.nv, rng, -0.9, 0.9);
  s.sigma = random_vec(d.nv, rng, 0.1, 0.9);
  SweepFields f = sweep_from(s);
  f.v = random_velocity(d, rng, 0.1);
  const CHProblem ch(d, p, f);
  Vec x(2 * d.nv);
  x << random_vec(d.nv, rng, -0.95, 0.95), random_vec(d.nv, rng);
  const Eigen::MatrixXd J = Eigen::MatrixXd(ch.jacobian(x));
  const Eigen::MatrixXd Jfd =
      finite_difference_jacobian([&](const Vec& y) { return ch.residual(y); }, x, 1e-6);
  EXPECT_LE((J - Jfd).norm() / Jfd.norm(), 1e-6);
}

TEST(Assembly, SizeMismatchRejected) {
  const Discretization d = make_disc(2);
  const State s = uniform_state(d, 0.0, 0.5);
  SweepFields f = sweep_from(s);
  f.phi = Vec::Zero(3);
  EXPECT_THROW(CHProblem(d, ModelParams{}, f), InvalidState);
  EXPECT_THROW(assemble_nutrient(d, ModelParams{}, f), InvalidState);
}

TEST(Assembly, NutrientConservedWithoutFluxOrSources) {
  const Discretization d = make_disc(4);
  ModelParams p;
  p.K = 0.0;
  p.C = 0.0;
  p.chi_phi = 0.0;
  State s = uniform_state(d, 0.4, 0.7);
  std::mt19937_64 rng(2);
  s.phi = random_vec(d.nv, rng);
  for (int step = 0; step < 5; ++step) {
    const Vec next = solve(assemble_nutrient(d, p, sweep_from(s)), s.sigma);
    EXPECT_LE((next - s.sigma).cwiseAbs().maxCoeff(), 1e-12);
    s.sigma = next;
  }
}

TEST(Assembly, RobinRowUsesBoundaryLumping) {
  const Discretization d = make_disc(2);
  ModelParams with;
  ModelParams without = with;
  without.K = 0.0;
  const State s = uniform_state(d, 0.0, 0.5);
  const SystemBlock a = assemble_nutrient(d, with, sweep_from(s));
  const SystemBlock b = assemble_nutrient(d, without, sweep_from(s));
  int checked = 0;
  for (int i = 0; i < d.nv; ++i) {
    const Vec2& x = d.mesh->vertices[i];
    const bool edge_mid = Box{}.on_boundary(x) && std::abs(std::abs(x.x()) - std::abs(x.y())) > 1;
    if (!edge_mid) continue;
    const double ell = 5.0;
    EXPECT_NEAR(a.op.coeff(i, i) - b.op.coeff(i, i), with.K * ell, 1e-9);
    EXPECT_NEAR(a.rhs[i] - b.rhs[i], with.K * ell * with.sigma_infty, 1e-9);
    ++checked;
  }
  EXPECT_EQ(checked, 4);
}

TEST(Assembly, SaddleHomogeneousGivesZero) {
  const Discretization d = make_disc(3);
  const State s = uniform_state(d, 0.2, 0.5);
  SaddleOptions opt;
  opt.model_forcing = false;
  const SystemBlock blk = assemble_saddle(d, ModelParams{}, sweep_from(s), opt);
  EXPECT_EQ(blk.rhs.norm(), 0.0);
  const Vec x = solve(blk);
  EXPECT_EQ(x.norm(), 0.0);
}

TEST(Assembly, SaddlePressureBlockIsZero) {
  const Discretization d = make_disc(2);
  const State s = uniform_state(d, 0.2, 0.5);
  const SystemBlock blk = assemble_saddle(d, ModelParams{}, sweep_from(s));
  const int nu = d.num_velocity_unknowns();
  for (int r = nu; r < nu + d.nv; ++r) {
    for (SparseOperator::InnerIterator it(blk.op, r); it; ++it) {
      if (it.col() >= nu && it.col() < nu + d.nv) {
        EXPECT_EQ(it.value(), 0.0);
      }
    }
  }
  EXPECT_EQ(blk.op.rows(), nu + d.nv + 1);
}

TEST(Assembly, ConvectionIsSkew) {
  const Discretization d = make_disc(3);
  std::mt19937_64 rng(4);
  const SparseOperator N = assemble_convection_p2(d, random_velocity(d, rng));
  for (int k = 0; k < 20; ++k) {
    const Vec w = random_vec(d.np2, rng);
    EXPECT_LE(std::abs(w.dot(N * w)), 1e-12 * w.squaredNorm());
  }
}

TEST(Assembly, DivergenceResidualAfterSaddleSolve) {
  const Discretization d = make_disc(4);
  std::mt19937_64 rng(5);
  State s = uniform_state(d, 0.0, 0.5);
  s.phi = random_vec(d.nv, rng, -1, 1);
  s.mu = random_vec(d.nv, rng);
  const SystemBlock blk = assemble_saddle(d, ModelParams{}, sweep_from(s));
  LinearConfig lin{KrylovKind::GMRES, PrecondKind::LU, 1e-9, 1e-12, 500, 60};
  Vec x = Vec::Zero(blk.rhs.size());
  const SolveStats st = krylov_solve(blk.op, blk.rhs, x, lin);
  Vec v, pr;
  split_saddle(d, x, v, pr);
  const double tol = std::max(lin.rtol * st.rhs_norm, lin.atol);
  EXPECT_LE(divergence_residual(d, v), 10 * tol * std::max(1.0, velocity_h1(d, v)));
  EXPECT_NEAR(d.lumped.weights.dot(pr), 0.0, 1e-12 * std::max(1.0, pr.norm()));
}

TEST(Assembly, OldroydConstantRecurrence) {
  const Discretization d = make_disc(2);
  ModelParams p;
  p.dt = 0.5;
  p.tau_over_kappa_1 = p.tau_over_kappa_m1 = 1.0;
  const State s = uniform_state(d, 0.3, 0.6, Sym2::diag(2, 2));
  const Vec B = solve(assemble_oldroyd(d, p, sweep_from(s)));
  for (int i = 0; i < d.nv; ++i) {
    EXPECT_NEAR(B[i], 5.0 / 3.0, 1e-12);
    EXPECT_NEAR(B[d.nv + i], 0.0, 1e-12);
    EXPECT_NEAR(B[2 * d.nv + i], 5.0 / 3.0, 1e-12);
  }
}

TEST(Assembly, OldroydIdentityIsFixedPoint) {
  const Discretization d = make_disc(2);
  State s = uniform_state(d, -0.5, 0.5);
  for (int n = 0; n < 5; ++n) {
    s.B = solve(assemble_oldroyd(d, ModelParams{}, sweep_from(s)));
  }
  for (int i = 0; i < d.nv; ++i) {
    EXPECT_NEAR(s.B[i], 1.0, 1e-12);
    EXPECT_NEAR(s.B[d.nv + i], 0.0, 1e-12);
  }
}

TEST(Assembly, OldroydGrowthContractsBelowIdentity) {
  const Discretization d = make_disc(2);
  ModelParams p;
  p.growth_source = true;
  p.G = 0.5;
  p.dt = 0.1;
  p.tau_over_kappa_1 = p.tau_over_kappa_m1 = 2.0;
  State s = uniform_state(d, 1.0, 1.0);
  const double relax = 0.5, gam = 0.5;
  double scalar = 1.0;
  for (int n = 0; n < 200; ++n) {
    s.B = solve(assemble_oldroyd(d, p, sweep_from(s)), s.B);
    scalar = (scalar + p.dt * relax) / (1 + p.dt * (relax + gam));
  }
  EXPECT_NEAR(s.B[0], scalar, 1e-12);
  EXPECT_NEAR(scalar, relax / (relax + gam), 1e-8);
  EXPECT_LT(s.B[0], 1.0);
}

TEST(Assembly, OldroydSymmetricStorage) {
  const Discretization d = make_disc(3);
  std::mt19937_64 rng(8);
  State s = uniform_state(d, 0.0, 0.5, Sym2{1.2, 0.1, 0.9});
  SweepFields f = sweep_from(s);
  f.v = random_velocity(d, rng, 0.01);
  const SystemBlock blk = assemble_oldroyd(d, ModelParams{}, f);
  EXPECT_EQ(blk.rhs.size(), 3 * d.nv);
  const Vec B = solve(blk);
  for (int i = 0; i < d.nv; ++i) EXPECT_GT(min_eigenvalue(Sym2{B[i], B[d.nv + i], B[2 * d.nv + i]}), 0.0);
}
