#pragma once

#include "vech/assembly.hpp"
#include "vech/solver.hpp"

#include <functional>

namespace vech {

enum class SigmaInit { QuasiStatic, Projection };

struct InitialSpec {
  // perturbed circle: phi0 = -tanh(r / (sqrt(2) eps)), r = |x| - R0 (2 + amp cos(mode theta))
  double radius_scale = 5.0 / 12.0;
  double amplitude = 0.2;
  int mode = 2;
  std::function<double(const Vec2&)> phi0;  // overrides the circle when set
  SigmaInit sigma0 = SigmaInit::QuasiStatic;
  double sigma0_value = 1.0;  // datum for the projection mode
  Vec2 v0 = Vec2::Zero();
  Sym2 B0 = Sym2::identity();
};

/// Analytic initial phase field for the given interface width.
std::function<double(const Vec2&)> phi0_function(const InitialSpec& spec, double epsilon);

Vec make_phi0(const Mesh& mesh, const InitialSpec& spec, double epsilon);

/// Solves the quasi-static nutrient problem, iterating on the clamp set of
/// g(sigma). NonConvergence after 50 clamp updates.
Vec make_sigma0_quasistatic(const Discretization& d, const Vec& phi0, const ModelParams& p,
                            const LinearConfig& lin);

struct ProjectedInitials {
  Vec sigma, v, B;
};

/// Lumped-mass plus dt-stiffness projections of constant data (the velocity
/// projection is constrained to discretely divergence-free fields).
ProjectedInitials make_projected_initials(const Discretization& d, const InitialSpec& spec,
                                          double dt, const LinearConfig& lin);

/// Residual of the sigma projection system for a candidate solution.
double sigma_projection_residual(const Discretization& d, const Vec& sigma, double datum,
                                 double dt);

/// Full initial state on the given discretization.
State make_initial_state(const Discretization& d, const InitialSpec& spec, const ModelParams& p,
                         const LinearConfig& lin);

}  // namespace vech
