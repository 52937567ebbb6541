#pragma once

#include "vech/linalg.hpp"

#include <array>
#include <functional>

namespace vech {

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Sym2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  static Sym2 identity() { return {1.0, 0.0, 1.0}; }
  static Sym2 diag(double a, double b) { return {a, 0.0, b}; }

  double trace() const { return xx + yy; }
  double det() const { return xx * yy - xy * xy; }
  double norm() const;  // Frobenius
  Mat2 matrix() const;

  Sym2 operator+(const Sym2& o) const { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
  Sym2 operator-(const Sym2& o) const { return {xx - o.xx, xy - o.xy, yy - o.yy}; }
  Sym2 operator*(double s) const { return {xx * s, xy * s, yy * s}; }
};

/// Frobenius product A : B.
double ddot(const Sym2& a, const Sym2& b);

/// Symmetric part of an arbitrary 2x2 matrix.
Sym2 sym_part(const Mat2& m);

struct Eigen2 {
  std::array<double, 2> values;  // ascending
  std::array<Vec2, 2> vectors;   // orthonormal
};

/// Closed-form eigendecomposition. Off-diagonal entries below 1e-14 times the
/// matrix norm are treated as zero.
Eigen2 eigen(const Sym2& m);
double min_eigenvalue(const Sym2& m);

/// f applied to the eigenvalues with the eigenvectors kept.
template <typename F>
Sym2 spectral_apply(F&& f, const Sym2& m) {
  const Eigen2 e = eigen(m);
  if (e.values[0] == e.values[1]) {
    const double v = f(e.values[0]);
    return {v, 0.0, v};
  }
  const double f0 = f(e.values[0]);
  const double f1 = f(e.values[1]);
  const Vec2& a = e.vectors[0];
  const Vec2& b = e.vectors[1];
  return {f0 * a.x() * a.x() + f1 * b.x() * b.x(), f0 * a.x() * a.y() + f1 * b.x() * b.y(),
          f0 * a.y() * a.y() + f1 * b.y() * b.y()};
}

/// Throws DomainError for a non-positive eigenvalue.
Sym2 mat_log(const Sym2& m);
Sym2 mat_inverse(const Sym2& m);
Sym2 negative_part(const Sym2& m);

// Regularized logarithms; delta in (0, 1), L > 1.
double g_delta(double s, double delta);
double g_delta_prime(double s, double delta);
double beta_delta(double s, double delta);
double g_L(double s, double L);  // DomainError for s <= 0
double g_L_prime(double s, double L);
double beta_L(double s, double L);
double h_delta(double s, double delta);

struct RegularizationReport {
  // relations (a)..(h) in order; slack = lhs - rhs, (a) as minus the defect norm
  std::array<bool, 8> holds{};
  std::array<double, 8> slack{};
  bool all() const;
};

/// Evaluates the eight regularization inequalities for a pair of symmetric
/// matrices. (g) and (h) only apply for delta <= 1/2 and report +inf slack
/// otherwise.
RegularizationReport regularization_check(const Sym2& phi, const Sym2& psi, double delta, double tol = 1e-10);

/// 1/2 tr(B - ln B); throws DomainError unless B is positive definite.
double elastic_trace_energy(const Sym2& b);
/// kappa (B - I).
Sym2 elastic_stress(const Sym2& b, double kappa);

}  // namespace vech
