#pragma once

#include "vech/fespace.hpp"
#include "vech/matfun.hpp"

#include <string>
#include <vector>

namespace vech {

enum class Potential { Modified, Quartic };

struct ModelParams {
  double epsilon = 0.01;
  double beta = 0.1;
  double chi_phi = 10.0;
  double chi_sigma = 500.0;
  double K = 1000.0;
  double kappa = 1e4;
  double kappa_1 = 1e4;   // tumour phase, phase-dependent variant only
  double kappa_m1 = 1e4;  // healthy phase, phase-dependent variant only
  double alpha = 1e-3;
  double P = 2.0;
  double A_apop = 0.0;
  double C = 10.0;
  double G = 0.0;
  double m0 = 1e-12;
  double n0 = 0.002;
  double eta_1 = 5000.0;
  double eta_m1 = 5000.0;
  double tau_over_kappa_1 = 1.0;
  double tau_over_kappa_m1 = 1.0;
  double sigma_infty = 1.0;
  double dt = 5e-4;
  double t_end = 2.0;
  bool growth_source = false;
  bool phase_dependent_kappa = false;
  Potential potential = Potential::Modified;

  double A() const { return beta / epsilon; }
  double B() const { return beta * epsilon; }
};

// Double-well potential and its convex (1) / concave (2) split.
double psi(double t, Potential kind = Potential::Modified);
double psi_prime(double t, Potential kind = Potential::Modified);
double psi1_prime(double t, Potential kind = Potential::Modified);
double psi1_second(double t, Potential kind = Potential::Modified);
double psi2_prime(double t, Potential kind = Potential::Modified);

/// clamp((1+x)/2, 0, 1)
double h_cut(double x);
double h_cut_prime(double x);
/// clamp(s, 0, 1)
double g_cut(double s);
/// (1 + |kappa (B - I)|^2)^(-1/2)
double f_stress(const Sym2& b, double kappa);

double kappa_of(double phi, const ModelParams& p);
double tau_of(double phi, const ModelParams& p);
double eta_of(double phi, const ModelParams& p);
double mobility_of(double phi, const ModelParams& p);

struct Coefficients {
  double m, n, eta, tau, kappa;
};
Coefficients coefficients(double phi, const ModelParams& p);

/// Gamma_phi with the stiffness entering f(B) given explicitly.
double gamma_phi(double phi, double sigma, const Sym2& b, const ModelParams& p, double kappa);
double gamma_phi(double phi, double sigma, const Sym2& b, const ModelParams& p);
/// Partial derivative of gamma_phi with respect to phi.
double gamma_phi_dphi(double phi, double sigma, const Sym2& b, const ModelParams& p, double kappa);
double gamma_sigma(double phi, double sigma, const ModelParams& p);
double gamma_B(double phi, double sigma, const ModelParams& p);

/// Nodal fields of one time level; B is stored as (xx, xy, yy) blocks of
/// length num_vertices, v as two blocks over the P2 nodes.
struct State {
  Vec phi, mu, sigma, p, v, B;
  double t = 0.0;
  int step = 0;

  Sym2 B_at(int vertex) const;
  void set_B(int vertex, const Sym2& b);
};

struct Energy {
  double total = 0.0;
  double psi = 0.0;
  double grad = 0.0;
  double sigma = 0.0;
  double chem = 0.0;
  double kin = 0.0;
  double elastic = 0.0;
  bool finite = true;  // false when B lost positive definiteness somewhere
};

Energy discrete_energy(const State& s, const Mesh& mesh, const EdgeTable& edges,
                       const ModelParams& p);

struct StabilityConstants {
  double R0 = 0, R1 = 0, R2 = 0, R3 = 0;
  std::array<double, 9> c{};
  double a43_margin = 0;  // A R1 - 4 chi_phi^2 / chi_sigma
  double dt_star = 0;
  double cfl_threshold = 0;  // c* alpha^2 h_min^2
};

/// Constants of the discrete energy estimate. R0 and R3 are sampled from the
/// configured functions; C_tr is the trace-inequality constant.
StabilityConstants stability_constants(const ModelParams& p, double h_min, double c_star = 1.0,
                                       double C_tr = 1.0);

/// dt_star from precomputed constants; InvalidConfig if the A4 margin is not
/// positive.
double dt_star(const ModelParams& p, const StabilityConstants& sc);

struct CheckItem {
  std::string name;
  bool pass = false;
  bool hard = true;
  double margin = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckItem> items;
  StabilityConstants constants;
  bool ok() const;  // every hard item passes
  std::string text() const;
};

struct ValidationOptions {
  double h_min = 10.0 / 1024.0;
  double c_star = 1.0;
  double C_tr = 1.0;
  bool enforce_dt_star = false;
  bool enforce_cfl = false;
};

ValidationReport validate_params(const ModelParams& p, const ValidationOptions& opt = {});

}  // namespace vech
