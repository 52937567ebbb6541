#pragma once

#include "vech/assembly.hpp"
#include "vech/mesh.hpp"
#include "vech/model.hpp"
#include "vech/solver.hpp"

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace vech {

/// Writes phi, mu, sigma, p, |v| source vectors, B components and |T_el| as
/// legacy-VTK point data (17 significant digits).
void write_state_vtk(const Discretization& d, const State& s, const ModelParams& p,
                     std::ostream& out);

struct VtkData {
  std::vector<Vec2> points;
  std::vector<std::array<int, 3>> cells;
  std::map<std::string, std::vector<double>> scalars;
  std::map<std::string, std::vector<Vec2>> vectors;
};

VtkData read_vtk(std::istream& in);

struct MonitorRecord {
  int step = 0;
  double t = 0.0;
  Energy energy;
  double min_eig_B = 0.0;
  double max_Tel = 0.0;
  double mass = 0.0;
  double div_residual = 0.0;
  double dt_star_margin = 0.0;  // dt* - dt
  bool cfl_ok = false;
};

MonitorRecord make_monitor(const Discretization& d, const State& s, const ModelParams& p);

/// max over vertices of |kappa(phi) (B - I)|
double max_elastic_stress(const State& s, const ModelParams& p);
/// <(1 + phi) / 2, 1>_h
double tumour_mass(const LumpedMass& lm, const Vec& phi);

const std::string& monitor_csv_header();
std::string monitor_csv_row(const MonitorRecord& r);

const std::string& steps_csv_header();
std::string steps_csv_row(const StepReport& r);

/// Named vector together with its layout, as stored in checkpoints.
struct NamedField {
  std::string name;
  int components = 1;
  Vec data;
};

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;
  std::uint32_t version = kVersion;
  int step = 0;
  double t = 0.0;
  double dt = 0.0;
  std::string config_text;
  std::shared_ptr<MeshHierarchy> hierarchy;
  std::vector<NamedField> fields;

  const Vec& field(const std::string& name) const;
};

void write_checkpoint(const Checkpoint& c, std::ostream& out);
/// Refuses other schema versions with both versions in the message.
Checkpoint read_checkpoint(std::istream& in);

}  // namespace vech
