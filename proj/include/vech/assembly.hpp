#pragma once

#include "vech/fespace.hpp"
#include "vech/model.hpp"

#include <functional>
#include <memory>

namespace vech {

/// Mesh-dependent structures shared by every block of a time step.
struct Discretization {
  explicit Discretization(std::shared_ptr<const Mesh> mesh);

  std::shared_ptr<const Mesh> mesh;
  EdgeTable edges;
  LumpedMass lumped;
  SparseOperator stiffness;  // P1, unit coefficient
  SparseOperator p2_mass;    // one scalar component
  std::vector<char> p2_boundary;
  int nv = 0;   // P1 nodes
  int np2 = 0;  // P2 nodes
  std::vector<int> vel_free;   // reduced velocity index -> full P2 dof
  std::vector<int> vel_index;  // full P2 dof -> reduced index or -1

  int num_velocity_unknowns() const { return static_cast<int>(vel_free.size()); }
};

enum class BlockKind { CahnHilliard, Nutrient, Saddle, Tensor };

struct SystemBlock {
  BlockKind kind = BlockKind::Nutrient;
  SparseOperator op;
  Vec rhs;
};

/// Fields frozen during one outer sweep.
struct SweepFields {
  const State* prev = nullptr;  // level n-1
  Vec phi, mu, sigma, v, B;     // latest available level-n values
};

/// Nonlinear (phi, mu) block. Unknown vector is [phi; mu].
class CHProblem {
 public:
  CHProblem(const Discretization& d, const ModelParams& p, const SweepFields& f);

  Vec residual(const Vec& x) const;
  SparseOperator jacobian(const Vec& x) const;
  int size() const { return 2 * nv_; }

 private:
  const Discretization& d_;
  const ModelParams& p_;
  int nv_;
  Vec phi_prev_, sigma_;
  std::vector<Sym2> B_;
  SparseOperator Km_;  // I_h[m(phi_prev)] stiffness
  Vec convection_;     // -int phi_prev v . grad zeta_i
  Vec explicit_mu_;    // A psi2'(phi_prev) - chi_phi sigma (+ kappa variant term)
};

SystemBlock assemble_nutrient(const Discretization& d, const ModelParams& p,
                              const SweepFields& f);

/// Quasi-static nutrient operator for a given clamp state (1: unclamped
/// interior, 2: saturated above, 0: cut off below).
SystemBlock assemble_nutrient_quasistatic(const Discretization& d, const ModelParams& p,
                                          const Vec& phi, const std::vector<int>& clamp);

struct SaddleOptions {
  std::function<Vec2(const Vec2&)> body_force;  // extra volume force, optional
  double eta_override = 0.0;                    // > 0: constant viscosity
  bool time_term = true;
  bool convection = true;
  bool model_forcing = true;
};

/// Unknowns: reduced velocity, pressure (nv), Lagrange multiplier (1).
SystemBlock assemble_saddle(const Discretization& d, const ModelParams& p, const SweepFields& f,
                            const SaddleOptions& opt = {});

/// Splits a saddle solution into full P2 velocity and pressure.
void split_saddle(const Discretization& d, const Vec& x, Vec& v, Vec& pressure);

SystemBlock assemble_oldroyd(const Discretization& d, const ModelParams& p, const SweepFields& f,
                             bool lump_products = false);

/// Skew-symmetric convection pair of the momentum equation, for one scalar
/// component over all P2 nodes.
SparseOperator assemble_convection_p2(const Discretization& d, const Vec& v_prev);

/// max_i |int div v zeta_i|
double divergence_residual(const Discretization& d, const Vec& v);

/// H1 seminorm of a P2 velocity.
double velocity_h1(const Discretization& d, const Vec& v);

}  // namespace vech
