#include "helpers.hpp"
#include "vech/errors.hpp"
#include "vech/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace vech;
using namespace vech::testing;

namespace {

SparseOperator laplace_plus_mass(const Discretization& d) {
  SparseOperator a = d.stiffness;
  for (int i = 0; i < d.nv; ++i) a.coeffRef(i, i) += d.lumped.weights[i];
  a.makeCompressed();
  return a;
}

ModelParams ch_only_params() {
  ModelParams p;
  p.P = 0.0;
  p.A_apop = 0.0;
  p.chi_phi = 0.0;
  p.dt = 1e-3;
  return p;
}

}  // namespace

TEST(Solver, IdentityInOneIteration) {
  SparseOperator I(50, 50);
  I.setIdentity();
  std::mt19937_64 rng(1);
  const Vec b = random_vec(50, rng);
  for (auto kind : {KrylovKind::CG, KrylovKind::MINRES, KrylovKind::BiCGSTAB, KrylovKind::GMRES}) {
    Vec x;
    const SolveStats st = krylov_solve(I, b, x, LinearConfig{kind, PrecondKind::None});
    EXPECT_LE(st.iterations, 1) << to_string(kind);
    EXPECT_LE((x - b).norm(), 1e-12 * b.norm());
  }
}

TEST(Solver, MatchesDenseOracle) {
  const Discretization d = make_disc(8);
  const SparseOperator a = laplace_plus_mass(d);
  std::mt19937_64 rng(2);
  const Vec b = random_vec(d.nv, rng);
  const Vec exact = Eigen::MatrixXd(a).partialPivLu().solve(b);
  for (auto kind : {KrylovKind::CG, KrylovKind::MINRES, KrylovKind::BiCGSTAB, KrylovKind::GMRES}) {
    for (auto pc : {PrecondKind::None, PrecondKind::Jacobi, PrecondKind::ILU0, PrecondKind::LU}) {
      if (kind == KrylovKind::MINRES && pc == PrecondKind::ILU0) continue;  // not symmetric
      Vec x;
      const SolveStats st = krylov_solve(a, b, x, LinearConfig{kind, pc, 1e-12, 1e-14, 2000, 60});
      EXPECT_TRUE(st.converged);
      EXPECT_LE((x - exact).norm(), 1e-8 * exact.norm()) << to_string(kind) << "/" << to_string(pc);
    }
  }
}

TEST(Solver, ReportsTrueResidual) {
  const Discretization d = make_disc(6);
  const SparseOperator a = laplace_plus_mass(d);
  std::mt19937_64 rng(3);
  const Vec b = random_vec(d.nv, rng);
  for (auto kind : {KrylovKind::CG, KrylovKind::BiCGSTAB, KrylovKind::GMRES}) {
    Vec x;
    const SolveStats st = krylov_solve(a, b, x, LinearConfig{kind, PrecondKind::Jacobi, 1e-9});
    EXPECT_DOUBLE_EQ(st.residual, (b - a * x).norm());
    EXPECT_LE(st.residual, std::max(1e-9 * b.norm(), 1e-12));
    EXPECT_LE(st.residual, 10 * std::max(st.estimate, 1e-9 * b.norm()));
  }
}

TEST(Solver, BudgetExhaustionThrows) {
  const Discretization d = make_disc(8);
  const SparseOperator a = laplace_plus_mass(d);
  std::mt19937_64 rng(4);
  const Vec b = random_vec(d.nv, rng);
  Vec x;
  try {
    krylov_solve(a, b, x, LinearConfig{KrylovKind::CG, PrecondKind::None, 1e-14, 1e-16, 2, 60});
    FAIL() << "expected SolverFailure";
  } catch (const SolverFailure& e) {
    EXPECT_GT(e.final_residual(), 0.0);
    EXPECT_EQ(e.iterations(), 2);
  }
}

TEST(Solver, InvalidConfigRejected) {
  EXPECT_THROW(LinearConfig({KrylovKind::CG, PrecondKind::None, -1.0}).validate(), InvalidConfig);
  EXPECT_THROW(parse_krylov("lsqr"), InvalidConfig);
  EXPECT_EQ(parse_precond("block"), PrecondKind::Block);
  SparseOperator I(3, 3);
  I.setIdentity();
  EXPECT_THROW(make_preconditioner(PrecondKind::Block, I), InvalidConfig);
}

TEST(Solver, BlockPreconditionerAgreesWithDirect) {
  const Discretization d = make_disc(4);
  std::mt19937_64 rng(5);
  State s = uniform_state(d, 0.0, 0.5);
  s.phi = random_vec(d.nv, rng);
  s.mu = random_vec(d.nv, rng);
  s.v = random_velocity(d, rng, 1e-3);
  const ModelParams p;
  const SystemBlock blk = assemble_saddle(d, p, sweep_from(s));
  const int nu = d.num_velocity_unknowns();
  Vec schur(d.nv);
  for (int i = 0; i < d.nv; ++i) schur[i] = d.lumped.weights[i] / eta_of(s.phi[i], p);
  const auto m = make_block_preconditioner(blk.op, nu, schur);
  const LinearConfig lin{KrylovKind::GMRES, PrecondKind::Block, 1e-12, 1e-16, 500, 60};
  Vec xb, xd;
  const SolveStats st = krylov_solve(blk.op, blk.rhs, xb, lin, *m);
  krylov_solve(blk.op, blk.rhs, xd, LinearConfig{KrylovKind::GMRES, PrecondKind::LU, 1e-12, 1e-16});
  EXPECT_LE((xb - xd).norm(), 1e-8 * xd.norm());
  EXPECT_LT(st.iterations, 100);
  EXPECT_NEAR(d.lumped.weights.dot(xb.segment(nu, d.nv)), 0.0, 1e-12 * xb.norm());
}

TEST(Solver, NewtonAtRootTakesNoIterations) {
  const Discretization d = make_disc(3);
  const State s = uniform_state(d, 1.0, 0.0);
  const CHProblem ch(d, ModelParams{}, sweep_from(s));
  Vec x0(2 * d.nv);
  x0 << s.phi, Vec::Zero(d.nv);
  const NewtonResult r = newton_solve([&](const Vec& x) { return ch.residual(x); },
                                      [&](const Vec& x) { return ch.jacobian(x); }, x0,
                                      NewtonConfig{}, SolverConfig{}.ch);
  EXPECT_LE(r.iterations, 1);
}

TEST(Solver, NewtonConvergesSuperlinearly) {
  const Discretization d = make_disc(3);
  std::mt19937_64 rng(6);
  State s = uniform_state(d, 1.0, 0.5);
  s.phi += 1e-2 * random_vec(d.nv, rng);
  const ModelParams p;
  const CHProblem ch(d, p, sweep_from(s));
  Vec x0(2 * d.nv);
  x0 << s.phi, Vec::Zero(d.nv);
  NewtonConfig cfg;
  cfg.rtol = 1e-14;
  cfg.atol = 1e-11;
  const NewtonResult r = newton_solve([&](const Vec& x) { return ch.residual(x); },
                                      [&](const Vec& x) { return ch.jacobian(x); }, x0, cfg,
                                      LinearConfig{KrylovKind::GMRES, PrecondKind::LU, 1e-14, 1e-16});
  EXPECT_LE(r.iterations, 6);
  EXPECT_LT(r.history.back(), 1e-10);
  ASSERT_GE(r.history.size(), 3u);
  const std::size_t n = r.history.size();
  const double r0 = r.history[n - 3] / r.history[0], r1 = r.history[n - 2] / r.history[0];
  if (r1 < 1e-3) {
    EXPECT_GE(std::log(r.history[n - 1] / r.history[0]) / std::log(r1), 1.5);
  } else {
    EXPECT_GE(std::log(r1) / std::log(r0), 1.5);
  }
}

TEST(Solver, NewtonLineSearchFailureCarriesHistory) {
  auto res = [](const Vec& x) { Vec r(1); r[0] = x[0] * x[0] + 1.0; return r; };
  auto jac = [](const Vec& x) {
    SparseOperator j(1, 1);
    j.insert(0, 0) = 2 * x[0];
    return j;
  };
  Vec x0(1);
  x0[0] = 0.5;
  try {
    newton_solve(res, jac, x0, NewtonConfig{}, LinearConfig{KrylovKind::GMRES, PrecondKind::None});
    FAIL() << "expected NonConvergence";
  } catch (const NonConvergence& e) {
    EXPECT_GE(e.history().size(), 2u);
  }
}

TEST(Solver, PurePhaseIsGlobalFixedPoint) {
  const Discretization d = make_disc(4);
  ModelParams p;
  p.P = 0.0;
  p.C = 0.0;
  const State s0 = uniform_state(d, 1.0, p.sigma_infty);
  State s = s0;
  s.mu = Vec::Constant(d.nv, -p.chi_phi * p.sigma_infty);
  const State start = s;
  StepReport rep;
  for (int n = 0; n < 3; ++n) s = advance_step(s, d, p, SolverConfig{}, StepFlags{}, rep);
  EXPECT_LE((s.phi - start.phi).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((s.mu - start.mu).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((s.sigma - start.sigma).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(s.v.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((s.B - start.B).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Solver, ConvexSplitCahnHilliardDissipates) {
  const Discretization d = make_disc(8);
  const ModelParams p = ch_only_params();
  State s = uniform_state(d, 0.0, 0.5);
  for (int i = 0; i < d.nv; ++i) {
    const Vec2& x = d.mesh->vertices[i];
    s.phi[i] = 0.6 * std::sin(0.9 * x.x()) * std::cos(0.7 * x.y());
  }
  StepFlags frozen{true, true, true};
  StepReport rep;
  double prev = discrete_energy(s, *d.mesh, d.edges, p).total;
  for (int n = 0; n < 20; ++n) {
    s = advance_step(s, d, p, SolverConfig{}, frozen, rep);
    const double e = discrete_energy(s, *d.mesh, d.edges, p).total;
    EXPECT_LE(e, prev + 1e-9 * std::abs(prev));
    prev = e;
  }
}

TEST(Solver, StepReportsAreDeterministic) {
  const Discretization d = make_disc(4);
  std::mt19937_64 rng(7);
  State s = uniform_state(d, 0.0, 0.8);
  s.phi = 0.5 * random_vec(d.nv, rng);
  const ModelParams p;
  StepReport a, b;
  const State sa = advance_step(s, d, p, SolverConfig{}, StepFlags{}, a);
  const State sb = advance_step(s, d, p, SolverConfig{}, StepFlags{}, b);
  EXPECT_EQ(a.newton_history, b.newton_history);
  EXPECT_EQ(a.saddle_residual, b.saddle_residual);
  EXPECT_EQ(a.energy_after, b.energy_after);
  EXPECT_TRUE((sa.B.array() == sb.B.array()).all());
  EXPECT_TRUE((sa.v.array() == sb.v.array()).all());
}

TEST(Solver, StepReportFields) {
  const Discretization d = make_disc(4);
  std::mt19937_64 rng(8);
  State s = uniform_state(d, 0.0, 0.8);
  s.phi = 0.5 * random_vec(d.nv, rng);
  StepReport r;
  const State n = advance_step(s, d, ModelParams{}, SolverConfig{}, StepFlags{}, r);
  EXPECT_EQ(r.step, 1);
  EXPECT_EQ(n.step, 1);
  EXPECT_DOUBLE_EQ(n.t, ModelParams{}.dt);
  EXPECT_GT(r.newton_iterations, 0);
  EXPECT_TRUE(r.B_positive);
  EXPECT_GT(r.min_eig_B, 0.0);
  EXPECT_GE(r.wall_ms, 0.0);
  EXPECT_EQ(r.newton_history.size(), static_cast<std::size_t>(r.newton_iterations + 1));
}
