#include "vech/errors.hpp"
#include "vech/solver.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <sstream>

namespace vech {

KrylovKind parse_krylov(const std::string& s) {
  if (s == "cg") return KrylovKind::CG;
  if (s == "minres") return KrylovKind::MINRES;
  if (s == "bicgstab") return KrylovKind::BiCGSTAB;
  if (s == "gmres") return KrylovKind::GMRES;
  throw InvalidConfig("unknown krylov method: " + s);
}

PrecondKind parse_precond(const std::string& s) {
  if (s == "none") return PrecondKind::None;
  if (s == "jacobi") return PrecondKind::Jacobi;
  if (s == "ilu0") return PrecondKind::ILU0;
  if (s == "lu") return PrecondKind::LU;
  if (s == "block") return PrecondKind::Block;
  throw InvalidConfig("unknown preconditioner: " + s);
}

std::string to_string(KrylovKind k) {
  switch (k) {
    case KrylovKind::CG: return "cg";
    case KrylovKind::MINRES: return "minres";
    case KrylovKind::BiCGSTAB: return "bicgstab";
    case KrylovKind::GMRES: return "gmres";
  }
  return "?";
}

std::string to_string(PrecondKind k) {
  switch (k) {
    case PrecondKind::None: return "none";
    case PrecondKind::Jacobi: return "jacobi";
    case PrecondKind::ILU0: return "ilu0";
    case PrecondKind::LU: return "lu";
    case PrecondKind::Block: return "block";
  }
  return "?";
}

void LinearConfig::validate() const {
  if (!(rtol > 0) || !(atol > 0)) throw InvalidConfig("solver tolerances must be positive");
  if (max_iter < 1) throw InvalidConfig("solver max_iter must be at least 1");
  if (restart < 1) throw InvalidConfig("gmres restart must be at least 1");
}

namespace {

class Identity final : public Preconditioner {
 public:
  Vec apply(const Vec& r) const override { return r; }
};

class Jacobi final : public Preconditioner {
 public:
  explicit Jacobi(const SparseOperator& a) : inv_(a.rows()) {
    const Vec d = a.diagonal();
    for (int i = 0; i < d.size(); ++i) {
      const double v = std::abs(d[i]);
      inv_[i] = v > 0 ? 1.0 / v : 1.0;
    }
  }
  Vec apply(const Vec& r) const override { return inv_.cwiseProduct(r); }

 private:
  Vec inv_;
};

class ILU0 final : public Preconditioner {
 public:
  explicit ILU0(const SparseOperator& a) : lu_(a) {
    lu_.makeCompressed();
    const int n = static_cast<int>(lu_.rows());
    const int* outer = lu_.outerIndexPtr();
    const int* inner = lu_.innerIndexPtr();
    double* val = lu_.valuePtr();
    diag_.assign(n, -1);
    for (int i = 0; i < n; ++i) {
      for (int k = outer[i]; k < outer[i + 1]; ++k) {
        if (inner[k] == i) diag_[i] = k;
      }
      if (diag_[i] < 0) throw SolverFailure("ilu0: missing diagonal entry", 0.0, 0);
    }
    std::vector<int> pos(n, -1);
    for (int i = 0; i < n; ++i) {
      for (int k = outer[i]; k < outer[i + 1]; ++k) pos[inner[k]] = k;
      for (int k = outer[i]; k < outer[i + 1] && inner[k] < i; ++k) {
        const int j = inner[k];
        const double piv = val[diag_[j]];
        if (piv == 0.0) throw SolverFailure("ilu0: zero pivot", 0.0, 0);
        val[k] /= piv;
        for (int m = diag_[j] + 1; m < outer[j + 1]; ++m) {
          if (pos[inner[m]] >= 0) val[pos[inner[m]]] -= val[k] * val[m];
        }
      }
      for (int k = outer[i]; k < outer[i + 1]; ++k) pos[inner[k]] = -1;
    }
  }

  Vec apply(const Vec& r) const override {
    const int n = static_cast<int>(lu_.rows());
    const int* outer = lu_.outerIndexPtr();
    const int* inner = lu_.innerIndexPtr();
    const double* val = lu_.valuePtr();
    Vec z = r;
    for (int i = 0; i < n; ++i) {
      for (int k = outer[i]; k < diag_[i]; ++k) z[i] -= val[k] * z[inner[k]];
    }
    for (int i = n - 1; i >= 0; --i) {
      for (int k = diag_[i] + 1; k < outer[i + 1]; ++k) z[i] -= val[k] * z[inner[k]];
      z[i] /= val[diag_[i]];
    }
    return z;
  }

 private:
  SparseOperator lu_;
  std::vector<int> diag_;
};

class DirectLU final : public Preconditioner {
 public:
  explicit DirectLU(const SparseOperator& a) : a_(a) {
    solver_.compute(a_);
    if (solver_.info() != Eigen::Success) {
      throw SolverFailure("sparse LU factorization failed", 0.0, 0);
    }
  }
  Vec apply(const Vec& r) const override { return solver_.solve(r); }

 private:
  Eigen::SparseMatrix<double> a_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> solver_;
};

class SaddleBlock final : public Preconditioner {
 public:
  SaddleBlock(const SparseOperator& a, int nu, const Vec& schur) : nu_(nu), inv_s_(schur.size()) {
    const int n = static_cast<int>(a.rows());
    const int ns = static_cast<int>(schur.size());
    if (nu <= 0 || nu + ns > n) throw InvalidState("block preconditioner: bad block sizes");
    for (int i = 0; i < ns; ++i) {
      if (!(schur[i] > 0)) throw InvalidState("block preconditioner: Schur diagonal not positive");
      inv_s_[i] = 1.0 / schur[i];
    }
    Eigen::SparseMatrix<double> vel = a.topLeftCorner(nu, nu);
    Eigen::SparseMatrix<double> sym = 0.5 * (vel + Eigen::SparseMatrix<double>(vel.transpose()));
    llt_.compute(sym);
    if (llt_.info() != Eigen::Success) {
      lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>>();
      lu_->compute(vel);
      if (lu_->info() != Eigen::Success) throw SolverFailure("velocity block factorization failed", 0.0, 0);
    }
    tail_ = Vec::Zero(n - nu - ns);
    for (int r = nu + ns; r < n; ++r) {
      double c = 0.0;
      for (SparseOperator::InnerIterator it(a, r); it; ++it) {
        const int j = static_cast<int>(it.col()) - nu;
        if (j >= 0 && j < ns) c += it.value() * it.value() * inv_s_[j];
      }
      tail_[r - nu - ns] = c > 0 ? 1.0 / c : 1.0;
    }
  }
  Vec apply(const Vec& r) const override {
    Vec z(r.size());
    const int ns = static_cast<int>(inv_s_.size());
    z.head(nu_) = lu_ ? Vec(lu_->solve(r.head(nu_))) : Vec(llt_.solve(r.head(nu_)));
    z.segment(nu_, ns) = r.segment(nu_, ns).cwiseProduct(inv_s_);
    z.tail(tail_.size()) = r.tail(tail_.size()).cwiseProduct(tail_);
    return z;
  }

 private:
  int nu_;
  Vec inv_s_, tail_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>> lu_;
};

[[noreturn]] void fail(const std::string& what, double res, int it) {
  std::ostringstream os;
  os << what << " (residual " << res << " after " << it << " iterations)";
  throw SolverFailure(os.str(), res, it);
}

// Each routine runs until its estimate reaches tol or the budget ends;
// returns the final estimate. it counts iterations across calls.
double run_cg(const SparseOperator& a, const Vec& b, Vec& x, const Preconditioner& m, double tol,
              int max_it, int& it) {
  Vec r = b - a * x;
  Vec z = m.apply(r);
  Vec p = z;
  double rz = r.dot(z);
  double rn = r.norm();
  while (rn > tol && it < max_it) {
    const Vec ap = a * p;
    const double pap = p.dot(ap);
    if (!(pap > 0)) fail("cg: operator not positive definite", rn, it);
    const double alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    rn = r.norm();
    ++it;
    if (rn <= tol) break;
    z = m.apply(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return rn;
}

double run_minres(const SparseOperator& a, const Vec& b, Vec& x, const Preconditioner& m,
                  double tol, int max_it, int& it) {
  // preconditioned MINRES (Paige-Saunders), estimate tracked in the M^{-1} norm
  const int n = static_cast<int>(b.size());
  Vec r1 = b - a * x;
  Vec y = m.apply(r1);
  double beta1 = r1.dot(y);
  if (beta1 < 0) fail("minres: preconditioner not positive definite", r1.norm(), it);
  if (beta1 == 0) return 0.0;
  beta1 = std::sqrt(beta1);
  double oldb = 0, beta = beta1, dbar = 0, epsln = 0, phibar = beta1;
  double cs = -1, sn = 0;
  Vec w = Vec::Zero(n), w2 = Vec::Zero(n), r2 = r1;
  double rn = r1.norm();
  int local = 0;
  while (it < max_it) {
    ++it;
    ++local;
    const Vec v = y / beta;
    y = a * v;
    if (local >= 2) y -= (beta / oldb) * r1;
    const double alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    y = m.apply(r2);
    oldb = beta;
    double b2 = r2.dot(y);
    if (b2 < 0) fail("minres: preconditioner not positive definite", rn, it);
    beta = std::sqrt(b2);
    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const double gamma = std::max(std::hypot(gbar, beta), 1e-300);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;
    const Vec w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    x += phi * w;
    // cheap check on the preconditioned estimate, confirmed with a true residual
    if (phibar <= tol || beta == 0.0) {
      rn = (b - a * x).norm();
      if (rn <= tol) return rn;
      if (beta == 0.0) return rn;
    }
  }
  return (b - a * x).norm();
}

double run_bicgstab(const SparseOperator& a, const Vec& b, Vec& x, const Preconditioner& m,
                    double tol, int max_it, int& it) {
  Vec r = b - a * x;
  const Vec r0 = r;
  double rn = r.norm();
  double rho = 1, alpha = 1, omega = 1;
  Vec v = Vec::Zero(b.size()), p = Vec::Zero(b.size());
  const double r0n = r0.squaredNorm();
  bool first = true;
  while (rn > tol && it < max_it) {
    const double rho_new = r0.dot(r);
    if (std::abs(rho_new) < 1e-300 * r0n || rho_new == 0.0) {
      // lost orthogonality: restart from the current iterate
      return rn;
    }
    if (first) {
      p = r;
      first = false;
    } else {
      p = r + (rho_new / rho) * (alpha / omega) * (p - omega * v);
    }
    rho = rho_new;
    const Vec ph = m.apply(p);
    v = a * ph;
    const double r0v = r0.dot(v);
    if (r0v == 0.0) return rn;
    alpha = rho / r0v;
    const Vec s = r - alpha * v;
    ++it;
    if (s.norm() <= tol) {
      x += alpha * ph;
      return s.norm();
    }
    const Vec sh = m.apply(s);
    const Vec t = a * sh;
    const double tt = t.squaredNorm();
    omega = tt > 0 ? t.dot(s) / tt : 0.0;
    x += alpha * ph + omega * sh;
    r = s - omega * t;
    rn = r.norm();
    if (omega == 0.0) return rn;
  }
  return rn;
}

double run_gmres(const SparseOperator& a, const Vec& b, Vec& x, const Preconditioner& m,
                 double tol, int max_it, int restart, int& it) {
  const int n = static_cast<int>(b.size());
  Vec r = b - a * x;
  double rn = r.norm();
  while (rn > tol && it < max_it) {
    const int k_max = std::min(restart, max_it - it);
    Eigen::MatrixXd V(n, k_max + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(k_max + 1, k_max);
    Eigen::MatrixXd Z(n, k_max);
    Vec g = Vec::Zero(k_max + 1), cs = Vec::Zero(k_max), sn = Vec::Zero(k_max);
    V.col(0) = r / rn;
    g[0] = rn;
    int k = 0;
    for (; k < k_max; ++k) {
      Z.col(k) = m.apply(V.col(k));
      Vec w = a * Z.col(k);
      for (int j = 0; j <= k; ++j) {
        H(j, k) = w.dot(V.col(j));
        w -= H(j, k) * V.col(j);
      }
      H(k + 1, k) = w.norm();
      if (H(k + 1, k) > 0) V.col(k + 1) = w / H(k + 1, k);
      for (int j = 0; j < k; ++j) {
        const double tmp = cs[j] * H(j, k) + sn[j] * H(j + 1, k);
        H(j + 1, k) = -sn[j] * H(j, k) + cs[j] * H(j + 1, k);
        H(j, k) = tmp;
      }
      const double den = std::hypot(H(k, k), H(k + 1, k));
      cs[k] = den > 0 ? H(k, k) / den : 1.0;
      sn[k] = den > 0 ? H(k + 1, k) / den : 0.0;
      H(k, k) = den;
      H(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      ++it;
      if (std::abs(g[k + 1]) <= tol || H(k, k) == 0.0) {
        ++k;
        break;
      }
    }
    Vec yk = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    x += Z.leftCols(k) * yk;
    r = b - a * x;
    const double rn_new = r.norm();
    if (rn_new >= rn && k < k_max) {
      rn = rn_new;
      break;  // stagnation
    }
    rn = rn_new;
  }
  return rn;
}

}  // namespace

std::unique_ptr<Preconditioner> make_preconditioner(PrecondKind kind, const SparseOperator& a) {
  switch (kind) {
    case PrecondKind::None: return std::make_unique<Identity>();
    case PrecondKind::Jacobi: return std::make_unique<Jacobi>(a);
    case PrecondKind::ILU0: return std::make_unique<ILU0>(a);
    case PrecondKind::LU: return std::make_unique<DirectLU>(a);
    case PrecondKind::Block:
      throw InvalidConfig("block preconditioner is only available for the saddle system");
  }
  return std::make_unique<Identity>();
}

std::unique_ptr<Preconditioner> make_block_preconditioner(const SparseOperator& a, int nu,
                                                          const Vec& schur_diag) {
  return std::make_unique<SaddleBlock>(a, nu, schur_diag);
}

SolveStats krylov_solve(const SparseOperator& a, const Vec& b, Vec& x, const LinearConfig& cfg) {
  const auto m = make_preconditioner(cfg.precond, a);
  return krylov_solve(a, b, x, cfg, *m);
}

SolveStats krylov_solve(const SparseOperator& a, const Vec& b, Vec& x, const LinearConfig& cfg,
                        const Preconditioner& m) {
  cfg.validate();
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw InvalidState("krylov_solve: operator and right-hand side sizes differ");
  }
  if (x.size() != b.size()) x = Vec::Zero(b.size());
  SolveStats st;
  st.rhs_norm = b.norm();
  const double tol = std::max(cfg.rtol * st.rhs_norm, cfg.atol);
  int it = 0;
  int stalls = 0;
  for (;;) {
    const int before = it;
    switch (cfg.kind) {
      case KrylovKind::CG: st.estimate = run_cg(a, b, x, m, tol, cfg.max_iter, it); break;
      case KrylovKind::MINRES: st.estimate = run_minres(a, b, x, m, tol, cfg.max_iter, it); break;
      case KrylovKind::BiCGSTAB: st.estimate = run_bicgstab(a, b, x, m, tol, cfg.max_iter, it); break;
      case KrylovKind::GMRES:
        st.estimate = run_gmres(a, b, x, m, tol, cfg.max_iter, cfg.restart, it);
        break;
    }
    st.residual = (b - a * x).norm();
    if (st.residual <= tol) break;
    if (it >= cfg.max_iter) fail(to_string(cfg.kind) + ": iteration budget exhausted", st.residual, it);
    stalls = it == before ? stalls + 1 : 0;
    if (stalls >= 2) fail(to_string(cfg.kind) + ": breakdown", st.residual, it);
  }
  st.iterations = it;
  st.converged = true;
  return st;
}

NewtonResult newton_solve(const ResidualFn& residual, const JacobianFn& jacobian, Vec x0,
                          const NewtonConfig& cfg, const LinearConfig& lin) {
  NewtonResult res;
  res.x = std::move(x0);
  Vec r = residual(res.x);
  double rn = r.norm();
  const double r0 = rn;
  res.history.push_back(rn);
  const double tol = std::max(cfg.rtol * r0, cfg.atol);
  std::unique_ptr<Preconditioner> m;
  while (rn > tol) {
    if (res.iterations >= cfg.max_iter) {
      throw NonConvergence("newton: iteration budget exhausted", res.history);
    }
    const SparseOperator J = jacobian(res.x);
    Vec dx = Vec::Zero(r.size());
    LinearConfig inner = lin;
    // the linear solve only needs to be a little more accurate than the Newton target
    inner.atol = std::min(lin.atol, 0.1 * tol);
    // the first Jacobian's preconditioner is kept until a solve fails with it
    if (!m) m = make_preconditioner(lin.precond, J);
    SolveStats st;
    try {
      st = krylov_solve(J, -r, dx, inner, *m);
    } catch (const SolverFailure&) {
      m = make_preconditioner(lin.precond, J);
      dx.setZero();
      st = krylov_solve(J, -r, dx, inner, *m);
    }
    res.linear_iterations += st.iterations;
    double step = 1.0;
    Vec trial = res.x + dx;
    Vec rt = residual(trial);
    int bt = 0;
    while (!(rt.norm() < rn) && bt < cfg.max_backtracks) {
      step *= cfg.backtrack;
      trial = res.x + step * dx;
      rt = residual(trial);
      ++bt;
    }
    if (!(rt.norm() < rn)) {
      res.history.push_back(rt.norm());
      throw NonConvergence("newton: line search exhausted", res.history);
    }
    res.x = std::move(trial);
    r = std::move(rt);
    rn = r.norm();
    res.history.push_back(rn);
    ++res.iterations;
  }
  return res;
}

Eigen::MatrixXd finite_difference_jacobian(const ResidualFn& residual, const Vec& x, double h) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd J(residual(x).size(), n);
  for (int j = 0; j < n; ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (residual(xp) - residual(xm)) / (2 * h);
  }
  return J;
}

}  // namespace vech
