#pragma once

#include "vech/config.hpp"
#include "vech/io.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace vech {

/// One evolving run: mesh hierarchy, discretization and the current state.
class Simulation {
 public:
  /// Bootstraps the interface mesh against the analytic phi0 and builds the
  /// initial state. Throws InvalidConfig on hard validation failures.
  explicit Simulation(RunConfig cfg, std::ostream* log = nullptr);

  /// Restores a run from a checkpoint. `overrides` are key=value assignments
  /// applied on top of the stored configuration; a changed dt is refused
  /// unless allow_dt_change is set.
  static Simulation from_checkpoint(const Checkpoint& ckpt,
                                    const std::vector<std::string>& overrides,
                                    bool allow_dt_change, std::ostream* log = nullptr);

  /// adapt -> transfer -> advance -> monitor
  const StepReport& step();
  bool finished() const { return state_.step >= cfg_.num_steps(); }

  const RunConfig& config() const { return cfg_; }
  const std::string& config_text() const { return config_text_; }
  const State& state() const { return state_; }
  const Discretization& discretization() const { return *disc_; }
  const MeshHierarchy& hierarchy() const { return *hier_; }
  const MonitorRecord& monitor() const { return monitor_; }
  const StepReport& last_report() const { return report_; }
  const ValidationReport& validation() const { return validation_; }

  Checkpoint checkpoint() const;

  /// Adaptation plus field transfer only (exposed for tests).
  bool adapt();

 private:
  Simulation() = default;
  void setup_constants();
  void refresh_monitor();
  void logf(const std::string& msg) const;

  RunConfig cfg_;
  std::string config_text_;
  std::shared_ptr<MeshHierarchy> hier_;
  std::unique_ptr<Discretization> disc_;
  State state_;
  StepReport report_;
  MonitorRecord monitor_;
  ValidationReport validation_;
  StabilityConstants constants_;
  std::ostream* log_ = nullptr;
};

/// Moves a state to a new mesh: P1 fields by the transfer map, v by P2
/// nodal interpolation, B projected onto the positive semidefinite cone where
/// interpolation produced eigenvalues below -1e-12. Returns the number of
/// projected vertices.
int transfer_state(const Discretization& from, const Discretization& to, const Transfer& tr,
                   State& s);

struct RunResult {
  bool ok = true;
  int steps = 0;
  std::string error;
  std::string last_checkpoint;
  MonitorRecord final_monitor;
};

/// Drives a simulation to t_end writing monitors.csv, steps.csv, state_*.vtk
/// and checkpoint files into the output directory. Monitor and step files of
/// an earlier run in the same directory are truncated to the current step and
/// continued.
RunResult run_to_end(Simulation& sim, std::ostream* log = nullptr);

/// Builds the run configuration from a config file plus key=value overrides.
Config load_config(const std::string& path, const std::vector<std::string>& overrides);

}  // namespace vech
