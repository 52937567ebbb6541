#include "vech/errors.hpp"
#include "vech/matfun.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace vech;

namespace {

Sym2 random_sym(std::mt19937_64& rng, double scale = 10.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

Mat2 rotation(double a) {
  Mat2 q;
  q << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return q;
}

Sym2 from_matrix(const Mat2& m) { return sym_part(m); }

void expect_sym_near(const Sym2& a, const Sym2& b, double tol) {
  EXPECT_NEAR(a.xx, b.xx, tol);
  EXPECT_NEAR(a.xy, b.xy, tol);
  EXPECT_NEAR(a.yy, b.yy, tol);
}

}  // namespace

TEST(Matfun, IdentityMapReturnsMatrix) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 100; ++k) {
    const Sym2 m = random_sym(rng);
    expect_sym_near(spectral_apply([](double s) { return s; }, m), m, 1e-13);
  }
}

TEST(Matfun, RepeatedEigenvalueGivesScaledIdentity) {
  const Sym2 r = spectral_apply([](double s) { return std::exp(s); }, Sym2::diag(0.7, 0.7));
  expect_sym_near(r, Sym2::diag(std::exp(0.7), std::exp(0.7)), 1e-15);
}

TEST(Matfun, BetaCutsNegativeEigenvalue) {
  const Sym2 r = spectral_apply([](double s) { return beta_delta(s, 0.5); }, Sym2::diag(-1, 3));
  expect_sym_near(r, Sym2::diag(0.5, 3.0), 1e-15);
}

TEST(Matfun, DerivativeAtIdentity) {
  for (double d : {0.01, 0.25, 0.5, 1.0}) {
    const Sym2 r = spectral_apply([d](double s) { return g_delta_prime(s, d); }, Sym2::identity());
    expect_sym_near(r, Sym2::identity(), 1e-15);
  }
}

TEST(Matfun, ScalarKnees) {
  EXPECT_NEAR(g_delta(0.5, 0.5), std::log(0.5), 1e-15);
  EXPECT_NEAR(g_delta(0.5, 0.5), -0.6931471805599453, 1e-15);
  EXPECT_EQ(beta_delta(0.3, 0.5), 0.5);
  EXPECT_EQ(beta_delta(2.0, 0.5), 2.0);
  EXPECT_NEAR(g_L(3.0, 3.0), 1.0986122886681098, 1e-15);
  EXPECT_THROW(g_L(0.0, 3.0), DomainError);
  EXPECT_THROW(g_L(-1.0, 3.0), DomainError);
  EXPECT_NEAR(h_delta(2.0, 0.25), g_L(2.0, 4.0), 0.0);
}

TEST(Matfun, RegularizedLogIsC1) {
  for (double d : {0.01, 0.25, 0.5}) {
    const double e = 1e-7;
    EXPECT_NEAR(g_delta(d - e, d), g_delta(d + e, d), 3e-7 / d);
    EXPECT_NEAR(g_delta_prime(d - e, d), g_delta_prime(d + e, d), 1e-5 / (d * d));
  }
  for (double L : {2.0, 10.0}) {
    EXPECT_NEAR(g_L_prime(L * (1 - 1e-9), L), g_L_prime(L * (1 + 1e-9), L), 1e-8);
  }
}

TEST(Matfun, RegularizedLogIsConcave) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-20.0, 20.0), l(0.0, 1.0);
  for (double d : {0.01, 0.25, 0.5}) {
    for (int k = 0; k < 10000; ++k) {
      const double s = u(rng), t = u(rng), a = l(rng);
      EXPECT_GE(g_delta(a * s + (1 - a) * t, d), a * g_delta(s, d) + (1 - a) * g_delta(t, d) - 1e-12);
    }
  }
}

TEST(Matfun, CommutesWithRotations) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ang(0.0, 6.3);
  auto f = [](double s) { return g_delta(s, 0.25); };
  for (int k = 0; k < 1000; ++k) {
    const Sym2 m = random_sym(rng);
    const Mat2 q = rotation(ang(rng));
    const Sym2 rotated = from_matrix(q.transpose() * m.matrix() * q);
    const Sym2 lhs = spectral_apply(f, rotated);
    const Sym2 rhs = from_matrix(q.transpose() * spectral_apply(f, m).matrix() * q);
    const double scale = std::max(1.0, spectral_apply(f, m).norm());
    expect_sym_near(lhs, rhs, 1e-12 * scale);
  }
}

TEST(Matfun, BetaAndDerivativeAreInverse) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 1000; ++k) {
    const Sym2 m = random_sym(rng);
    const Mat2 b = spectral_apply([](double s) { return beta_delta(s, 0.1); }, m).matrix();
    const Mat2 g = spectral_apply([](double s) { return g_delta_prime(s, 0.1); }, m).matrix();
    EXPECT_LE((b * g - Mat2::Identity()).norm(), 1e-12);
    EXPECT_LE((b * g - g * b).norm(), 1e-12);
  }
}

TEST(Matfun, BetaRespectsCutoff) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 1000; ++k) {
    const Sym2 m = random_sym(rng);
    for (double d : {0.01, 0.3}) {
      const Sym2 b = spectral_apply([d](double s) { return beta_delta(s, d); }, m);
      EXPECT_GE(min_eigenvalue(b), d - 1e-12);
    }
  }
}

TEST(Matfun, EigenDecompositionReconstructs) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 1000; ++k) {
    const Sym2 m = random_sym(rng);
    const Eigen2 e = eigen(m);
    EXPECT_LE(e.values[0], e.values[1]);
    Mat2 r = Mat2::Zero();
    for (int j = 0; j < 2; ++j) r += e.values[j] * e.vectors[j] * e.vectors[j].transpose();
    EXPECT_LE((r - m.matrix()).norm(), 1e-12 * std::max(1.0, m.norm()));
    EXPECT_NEAR(e.vectors[0].dot(e.vectors[1]), 0.0, 1e-14);
  }
  const Eigen2 near = eigen(Sym2{1.0, 1e-17, 1.0 + 1e-15});
  EXPECT_NEAR(near.values[0], 1.0, 1e-15);
}

TEST(Matfun, LogAndInverse) {
  const Sym2 b{2.0, 0.5, 1.0};
  const Mat2 inv = mat_inverse(b).matrix();
  EXPECT_LE((inv * b.matrix() - Mat2::Identity()).norm(), 1e-14);
  const Sym2 l = mat_log(b);
  const Sym2 back = spectral_apply([](double s) { return std::exp(s); }, l);
  expect_sym_near(back, b, 1e-14);
  EXPECT_THROW(mat_log(Sym2::diag(1.0, -0.1)), DomainError);
  expect_sym_near(negative_part(Sym2::diag(-2.0, 3.0)), Sym2::diag(-2.0, 0.0), 0.0);
}

TEST(Matfun, CheckHoldsAtIdentity) {
  const RegularizationReport r = regularization_check(Sym2::identity(), Sym2::identity(), 0.5);
  EXPECT_TRUE(r.all());
  EXPECT_EQ(r.slack[0], 0.0);
  EXPECT_NEAR(r.slack[5], 0.0, 1e-15);
}

TEST(Matfun, TraceBoundOnIndefiniteMatrix) {
  const double d = 0.25;
  const Sym2 phi = Sym2::diag(-2.0, 4.0);
  const double lhs = (-2.0 - (-2.0 / d + std::log(d) - 1.0)) + (4.0 - std::log(4.0));
  EXPECT_NEAR(lhs, 11.0, 1e-14);
  const RegularizationReport r = regularization_check(phi, Sym2::identity(), d);
  EXPECT_TRUE(r.holds[6]);
  EXPECT_NEAR(r.slack[6], lhs - 4.0, 1e-13);
}

TEST(Matfun, RandomPairsSatisfyAllRelations) {
  std::mt19937_64 rng(7);
  for (double d : {0.5, 0.25, 0.01}) {
    int failures = 0;
    for (int k = 0; k < 20000; ++k) {
      const RegularizationReport r = regularization_check(random_sym(rng), random_sym(rng), d);
      failures += !r.all();
    }
    EXPECT_EQ(failures, 0) << "delta " << d;
  }
}

TEST(Matfun, ElasticEnergyAndStress) {
  EXPECT_NEAR(elastic_trace_energy(Sym2::identity()), 1.0, 1e-15);
  expect_sym_near(elastic_stress(Sym2::identity(), 1e4), Sym2{}, 0.0);
  const Sym2 t = elastic_stress(Sym2::diag(2, 2), 1e4);
  expect_sym_near(t, Sym2::diag(1e4, 1e4), 0.0);
  EXPECT_NEAR(t.norm(), 1e4 * std::sqrt(2.0), 1e-10);
  EXPECT_NEAR(elastic_trace_energy(Sym2::diag(1, 1e-8)), 0.5 * (1 + 1e-8 - std::log(1e-8)), 1e-12);
  EXPECT_NEAR(elastic_trace_energy(Sym2::diag(1, 1e-8)), 9.71, 5e-3);
  double prev = 0.0;
  for (double s = 1.0; s > 1e-12; s *= 0.1) {
    const double e = elastic_trace_energy(Sym2::diag(1, s));
    EXPECT_GT(e, prev);
    prev = e;
  }
  EXPECT_THROW(elastic_trace_energy(Sym2::diag(1, 0)), DomainError);
}
