#pragma once

#include "vech/init.hpp"
#include "vech/mesh.hpp"
#include "vech/model.hpp"
#include "vech/solver.hpp"

#include <map>
#include <string>
#include <vector>

namespace vech {

/// Flat key=value text with [section] headers; keys are stored as
/// "section.key". A "[profile NAME]" block holds fully qualified overrides
/// applied when run.profile = NAME.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  /// "section.key=value"
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& raw(const std::string& key) const;

  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  /// Applies the profile block selected by run.profile, then the set() overrides.
  Config resolved() const;
  /// Canonical text: one "key = value" per line, sorted, profiles dropped.
  std::string text() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::map<std::string, std::string>> profiles_;
  std::map<std::string, std::string> overrides_;  // set() calls win over profiles
};

struct RunConfig {
  ModelParams model;
  Box box;
  RefinementSpec mesh;
  bool adapt = true;
  SolverConfig solver;
  InitialSpec init;
  StepFlags flags;
  int output_every = 50;     // VTK cadence in steps, 0 disables fields
  int checkpoint_every = 0;  // 0: final checkpoint only
  std::string output_dir = "out";
  std::string tag = "run";
  double clip_B = 0.0;       // > 0: spectral cut-off of B at this delta
  double enforce_cfl = 0.0;  // > 0: c* of a hard CFL check
  double c_star = 1.0;
  double C_tr = 1.0;
  int threads = 1;
  int max_retries = 1;
  bool quiet = false;

  int num_steps() const;
  void validate() const;
};

/// Reads every known key; unknown keys raise InvalidConfig.
RunConfig run_config_from(const Config& c);

/// Inverse of run_config_from (exact for every representable field).
Config to_config(const RunConfig& r);

}  // namespace vech
