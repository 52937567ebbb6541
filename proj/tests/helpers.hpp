#pragma once

#include "vech/assembly.hpp"
#include "vech/model.hpp"

#include <memory>
#include <random>

namespace vech::testing {

inline Discretization make_disc(int n, const Box& box = Box{}) {
  return Discretization(std::make_shared<const Mesh>(build_macro_mesh(box, n)));
}

inline State uniform_state(const Discretization& d, double phi, double sigma,
                           const Sym2& b = Sym2::identity()) {
  State s;
  s.phi = Vec::Constant(d.nv, phi);
  s.mu = Vec::Zero(d.nv);
  s.sigma = Vec::Constant(d.nv, sigma);
  s.p = Vec::Zero(d.nv);
  s.v = Vec::Zero(2 * d.np2);
  s.B = Vec::Zero(3 * d.nv);
  for (int i = 0; i < d.nv; ++i) s.set_B(i, b);
  return s;
}

inline SweepFields sweep_from(const State& s) {
  SweepFields f;
  f.prev = &s;
  f.phi = s.phi;
  f.mu = s.mu;
  f.sigma = s.sigma;
  f.v = s.v;
  f.B = s.B;
  return f;
}

inline Vec random_vec(int n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

// zero on boundary P2 nodes
inline Vec random_velocity(const Discretization& d, std::mt19937_64& rng, double scale = 1.0) {
  Vec v = scale * random_vec(2 * d.np2, rng);
  for (int c = 0; c < 2; ++c) {
    for (int k = 0; k < d.np2; ++k) {
      if (d.p2_boundary[k]) v[c * d.np2 + k] = 0.0;
    }
  }
  return v;
}

}  // namespace vech::testing
