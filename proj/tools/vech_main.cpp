#include "vech/errors.hpp"
#include "vech/selftest.hpp"
#include "vech/sim.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace vech;

namespace {

std::vector<std::string> collect_sets(const std::vector<std::string>& sets, int threads,
                                      const std::string& output_dir, double enforce_cfl,
                                      double clip_B) {
  std::vector<std::string> out = sets;
  if (threads > 0) out.push_back("run.threads=" + std::to_string(threads));
  if (!output_dir.empty()) out.push_back("run.output_dir=" + output_dir);
  char buf[64];
  if (enforce_cfl > 0) {
    std::snprintf(buf, sizeof buf, "run.enforce_cfl=%.17g", enforce_cfl);
    out.push_back(buf);
  }
  if (clip_B > 0) {
    std::snprintf(buf, sizeof buf, "run.clip_B=%.17g", clip_B);
    out.push_back(buf);
  }
  return out;
}

int report_run(const RunResult& r) {
  if (!r.ok) {
    std::cerr << "run aborted: " << r.error << "\nlast checkpoint: " << r.last_checkpoint << '\n';
    return 3;
  }
  std::cout << "finished " << r.steps << " steps; checkpoint " << r.last_checkpoint << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"viscoelastic Cahn-Hilliard tumour growth simulator"};
  app.require_subcommand(1);

  std::vector<std::string> sets;
  int threads = 0;
  std::string output_dir;
  double enforce_cfl = 0.0;
  double clip_B = 0.0;
  bool allow_dt_change = false;
  std::string path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--set", sets, "override a config key (section.key=value)");
    sub->add_option("--threads", threads, "thread count")->check(CLI::PositiveNumber);
    sub->add_option("--output-dir", output_dir, "output directory");
    sub->add_option("--enforce-cfl", enforce_cfl, "make the CFL check hard with this c*");
    sub->add_option("--clip-B", clip_B, "spectral cut-off of B at this delta");
  };

  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", path, "config file")->required();
  add_common(run);

  auto* resume = app.add_subcommand("resume", "continue from a checkpoint");
  resume->add_option("checkpoint", path, "checkpoint file")->required();
  resume->add_flag("--allow-dt-change", allow_dt_change, "accept a different dt");
  add_common(resume);

  auto* validate = app.add_subcommand("validate", "check a config against the model assumptions");
  validate->add_option("config", path, "config file")->required();
  add_common(validate);

  auto* selftest = app.add_subcommand("selftest", "run the fast property suites");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto overrides = collect_sets(sets, threads, output_dir, enforce_cfl, clip_B);
    if (*run) {
      const RunConfig cfg = run_config_from(load_config(path, overrides));
      Simulation sim(cfg, &std::cout);
      return report_run(run_to_end(sim, &std::cout));
    }
    if (*resume) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw InvalidArgument("cannot open checkpoint '" + path + "'");
      const Checkpoint ckpt = read_checkpoint(in);
      Simulation sim = Simulation::from_checkpoint(ckpt, overrides, allow_dt_change, &std::cout);
      return report_run(run_to_end(sim, &std::cout));
    }
    if (*validate) {
      const RunConfig cfg = run_config_from(load_config(path, overrides));
      ValidationOptions opt;
      opt.h_min = cfg.box.width() / cfg.mesh.fine_n;
      opt.c_star = cfg.enforce_cfl > 0 ? cfg.enforce_cfl : cfg.c_star;
      opt.C_tr = cfg.C_tr;
      opt.enforce_cfl = cfg.enforce_cfl > 0;
      const ValidationReport rep = validate_params(cfg.model, opt);
      std::cout << rep.text();
      return rep.ok() ? 0 : 2;
    }
    if (*selftest) {
      const bool ok = run_selftest(std::cout);
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
