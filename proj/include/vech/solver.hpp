#pragma once

#include "vech/assembly.hpp"
#include "vech/linalg.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace vech {

enum class KrylovKind { CG, MINRES, BiCGSTAB, GMRES };
enum class PrecondKind { None, Jacobi, ILU0, LU, Block };

KrylovKind parse_krylov(const std::string& s);
PrecondKind parse_precond(const std::string& s);
std::string to_string(KrylovKind k);
std::string to_string(PrecondKind k);

struct LinearConfig {
  KrylovKind kind = KrylovKind::GMRES;
  PrecondKind precond = PrecondKind::Jacobi;
  double rtol = 1e-9;
  double atol = 1e-12;
  int max_iter = 2000;
  int restart = 60;  // GMRES

  void validate() const;
};

struct NewtonConfig {
  double rtol = 1e-8;
  double atol = 1e-10;
  int max_iter = 20;
  double backtrack = 0.5;
  int max_backtracks = 8;
};

struct SolverConfig {
  LinearConfig ch{KrylovKind::BiCGSTAB, PrecondKind::LU};
  LinearConfig nutrient{KrylovKind::CG, PrecondKind::Jacobi};
  LinearConfig saddle{KrylovKind::GMRES, PrecondKind::Block};
  LinearConfig oldroyd{KrylovKind::BiCGSTAB, PrecondKind::Jacobi};
  NewtonConfig newton;
  int outer_sweeps = 1;
  int max_dt_halvings = 0;
  bool lump_oldroyd_products = false;
};

class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual Vec apply(const Vec& r) const = 0;
};

/// Builds a preconditioner for a square operator. The LU variant is a sparse
/// direct factorization. Block needs the saddle structure and is refused here.
std::unique_ptr<Preconditioner> make_preconditioner(PrecondKind kind, const SparseOperator& a);

/// Block-diagonal preconditioner for [A D^T c; D 0 0; c^T 0 0] with nu velocity
/// unknowns: Cholesky of the symmetric part of A (LU if that is not positive
/// definite), schur_diag on the pressure rows and w^T S^-1 w on each trailing
/// constraint row.
std::unique_ptr<Preconditioner> make_block_preconditioner(const SparseOperator& a, int nu,
                                                          const Vec& schur_diag);

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;        // true residual ||b - A x||
  double estimate = 0.0;        // recurrence estimate at exit
  double rhs_norm = 0.0;
  bool converged = false;
};

/// Solves A x = b from the guess x. Throws SolverFailure on breakdown or when
/// the iteration budget is exhausted.
SolveStats krylov_solve(const SparseOperator& a, const Vec& b, Vec& x, const LinearConfig& cfg);
SolveStats krylov_solve(const SparseOperator& a, const Vec& b, Vec& x, const LinearConfig& cfg,
                        const Preconditioner& m);

struct NewtonResult {
  Vec x;
  std::vector<double> history;  // residual norms, initial first
  int iterations = 0;
  int linear_iterations = 0;
};

using ResidualFn = std::function<Vec(const Vec&)>;
using JacobianFn = std::function<SparseOperator(const Vec&)>;

/// Damped Newton iteration with backtracking on the residual norm.
NewtonResult newton_solve(const ResidualFn& residual, const JacobianFn& jacobian, Vec x0,
                          const NewtonConfig& cfg, const LinearConfig& lin);

/// Central finite-difference Jacobian (dense), for verification.
Eigen::MatrixXd finite_difference_jacobian(const ResidualFn& residual, const Vec& x,
                                           double h = 1e-6);

struct StepReport {
  int step = 0;
  double t = 0.0;
  double dt = 0.0;
  int newton_iterations = 0;
  int ch_linear_iterations = 0;
  int nutrient_iterations = 0;
  int saddle_iterations = 0;
  int oldroyd_iterations = 0;
  std::vector<double> newton_history;
  double nutrient_residual = 0.0;
  double saddle_residual = 0.0;
  double oldroyd_residual = 0.0;
  double div_residual = 0.0;
  double energy_before = 0.0;
  double energy_after = 0.0;
  double min_eig_B = 0.0;
  bool B_positive = true;
  double wall_ms = 0.0;
};

/// Which subsystems participate in a step; frozen fields keep their previous
/// values.
struct StepFlags {
  bool freeze_sigma = false;
  bool freeze_v = false;
  bool freeze_B = false;
};

/// One time step of the decoupled scheme: CH -> nutrient -> saddle -> Oldroyd,
/// repeated outer_sweeps times.
State advance_step(const State& prev, const Discretization& d, const ModelParams& p,
                   const SolverConfig& cfg, const StepFlags& flags, StepReport& report);

}  // namespace vech
