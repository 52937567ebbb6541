#include "vech/errors.hpp"
#include "vech/solver.hpp"

#include <chrono>
#include <limits>

namespace vech {

State advance_step(const State& prev, const Discretization& d, const ModelParams& p,
                   const SolverConfig& cfg, const StepFlags& flags, StepReport& report) {
  const auto start = std::chrono::steady_clock::now();
  report = StepReport{};
  report.step = prev.step + 1;
  report.dt = p.dt;
  report.t = prev.t + p.dt;
  {
    const Energy e = discrete_energy(prev, *d.mesh, d.edges, p);
    report.energy_before = e.total;
  }

  SweepFields f;
  f.prev = &prev;
  f.phi = prev.phi;
  f.mu = prev.mu;
  f.sigma = prev.sigma;
  f.v = prev.v;
  f.B = prev.B;
  Vec pressure = prev.p;
  const int nv = d.nv;

  for (int sweep = 0; sweep < std::max(1, cfg.outer_sweeps); ++sweep) {
    {
      const CHProblem ch(d, p, f);
      Vec x0(2 * nv);
      x0 << f.phi, f.mu;
      const NewtonResult nr = newton_solve([&](const Vec& x) { return ch.residual(x); },
                                           [&](const Vec& x) { return ch.jacobian(x); }, x0,
                                           cfg.newton, cfg.ch);
      f.phi = nr.x.head(nv);
      f.mu = nr.x.tail(nv);
      report.newton_iterations += nr.iterations;
      report.ch_linear_iterations += nr.linear_iterations;
      report.newton_history.insert(report.newton_history.end(), nr.history.begin(),
                                   nr.history.end());
    }
    if (!flags.freeze_sigma) {
      const SystemBlock blk = assemble_nutrient(d, p, f);
      Vec x = f.sigma;
      const SolveStats st = krylov_solve(blk.op, blk.rhs, x, cfg.nutrient);
      f.sigma = x;
      report.nutrient_iterations += st.iterations;
      report.nutrient_residual = st.residual;
    }
    if (!flags.freeze_v) {
      const SystemBlock blk = assemble_saddle(d, p, f);
      const int nu = d.num_velocity_unknowns();
      Vec x = Vec::Zero(blk.rhs.size());
      for (int k = 0; k < nu; ++k) x[k] = f.v[d.vel_free[k]];
      x.segment(nu, nv) = pressure;
      SolveStats st;
      if (cfg.saddle.precond == PrecondKind::Block) {
        Vec schur(nv);
        for (int i = 0; i < nv; ++i) schur[i] = d.lumped.weights[i] / eta_of(prev.phi[i], p);
        const auto m = make_block_preconditioner(blk.op, nu, schur);
        st = krylov_solve(blk.op, blk.rhs, x, cfg.saddle, *m);
      } else {
        st = krylov_solve(blk.op, blk.rhs, x, cfg.saddle);
      }
      split_saddle(d, x, f.v, pressure);
      report.saddle_iterations += st.iterations;
      report.saddle_residual = st.residual;
    }
    if (!flags.freeze_B) {
      const SystemBlock blk = assemble_oldroyd(d, p, f, cfg.lump_oldroyd_products);
      Vec x = f.B;
      const SolveStats st = krylov_solve(blk.op, blk.rhs, x, cfg.oldroyd);
      f.B = x;
      report.oldroyd_iterations += st.iterations;
      report.oldroyd_residual = st.residual;
    }
  }

  State next;
  next.phi = std::move(f.phi);
  next.mu = std::move(f.mu);
  next.sigma = std::move(f.sigma);
  next.v = std::move(f.v);
  next.B = std::move(f.B);
  next.p = std::move(pressure);
  next.t = report.t;
  next.step = report.step;

  double min_eig = std::numeric_limits<double>::infinity();
  for (int i = 0; i < nv; ++i) min_eig = std::min(min_eig, min_eigenvalue(next.B_at(i)));
  report.min_eig_B = min_eig;
  report.B_positive = min_eig > 0.0;
  report.div_residual = divergence_residual(d, next.v);
  report.energy_after = discrete_energy(next, *d.mesh, d.edges, p).total;
  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return next;
}

}  // namespace vech
