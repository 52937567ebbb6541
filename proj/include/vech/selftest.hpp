#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace vech {

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

std::string format_result(const CheckResult& r);

// Fast property suites.
CheckResult check_regularization_lemma(int samples = 100000, std::uint64_t seed = 1);
CheckResult check_convex_splitting(int samples = 100000, std::uint64_t seed = 2);
CheckResult check_mass_lumping(int fields = 1000, std::uint64_t seed = 3);
CheckResult check_discrete_laplacian(int pairs = 20, std::uint64_t seed = 4);
CheckResult check_ch_dissipation(int steps = 200, std::uint64_t seed = 5);
CheckResult check_oldroyd_oracle(int steps = 100);
CheckResult check_newton_jacobian(std::uint64_t seed = 7);
CheckResult check_manufactured_stokes();
CheckResult check_config_validation();
CheckResult check_resume_determinism(const std::string& work_dir);

struct DeskOptions {
  std::string experiments_dir;  // holds baseline.cfg and growth_stress.cfg
  std::string work_dir;
  int coarse_n = 16;
  int fine_n = 256;
  double dt = 1e-3;
  double t_end = 0.5;
  std::vector<double> growth = {0.0, 0.1, 0.2};
  bool verbose = false;
};

/// Baseline, frozen-B twin and growth-source runs; returns the positive
/// definiteness, viscous comparison and growth ordering checks.
std::vector<CheckResult> check_desk_experiments(const DeskOptions& opt);

/// Runs the fast suites and prints one line each.
bool run_selftest(std::ostream& out);

}  // namespace vech
