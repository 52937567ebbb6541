#include "vech/selftest.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <set>

using namespace vech;
namespace fs = std::filesystem;

#ifndef VECH_EXPERIMENTS_DIR
#define VECH_EXPERIMENTS_DIR "experiments"
#endif

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  std::string experiments = VECH_EXPERIMENTS_DIR;
  std::string work = (fs::temp_directory_path() / "vech_acceptance").string();
  bool verbose = false;
  app.add_option("--only", only, "criterion ids to run (default: all 13)")
      ->delimiter(',')
      ->check(CLI::Range(1, 13));
  app.add_option("--experiments", experiments, "directory with the experiment configs");
  app.add_option("--work-dir", work, "scratch directory for runs");
  app.add_flag("--verbose", verbose, "log desk-run steps");
  CLI11_PARSE(app, argc, argv);

  std::set<int> sel(only.begin(), only.end());
  if (sel.empty()) {
    for (int i = 1; i <= 13; ++i) sel.insert(i);
  }
  bool ok = true;
  auto emit = [&](const CheckResult& r) {
    std::cout << format_result(r) << std::endl;
    ok = ok && r.pass;
  };
  try {
    if (sel.count(1)) emit(check_regularization_lemma());
    if (sel.count(2)) emit(check_convex_splitting());
    if (sel.count(3)) emit(check_mass_lumping());
    if (sel.count(4)) emit(check_discrete_laplacian());
    if (sel.count(5)) emit(check_ch_dissipation());
    if (sel.count(6)) emit(check_oldroyd_oracle());
    if (sel.count(7)) emit(check_newton_jacobian());
    if (sel.count(8)) emit(check_manufactured_stokes());
    if (sel.count(9) || sel.count(10) || sel.count(11)) {
      DeskOptions opt;
      opt.experiments_dir = experiments;
      opt.work_dir = (fs::path(work) / "desk").string();
      opt.verbose = verbose;
      for (const CheckResult& r : check_desk_experiments(opt)) {
        if (sel.count(r.id)) emit(r);
      }
    }
    if (sel.count(12)) emit(check_config_validation());
    if (sel.count(13)) emit(check_resume_determinism((fs::path(work) / "resume").string()));
  } catch (const std::exception& e) {
    std::cout << "[FAIL] acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
  return ok ? 0 : 1;
}
