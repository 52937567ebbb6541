#include "vech/io.hpp"

#include "vech/detail/binary.hpp"
#include "vech/errors.hpp"

#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace vech {

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void scalar_block(std::ostream& out, const std::string& name, const Vec& v, int offset, int n) {
  out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (int i = 0; i < n; ++i) out << fmt17(v[offset + i]) << '\n';
}

}  // namespace

void write_state_vtk(const Discretization& d, const State& s, const ModelParams& p,
                     std::ostream& out) {
  const Mesh& mesh = *d.mesh;
  const int nv = d.nv;
  out << "# vtk DataFile Version 3.0\nvech state t=" << fmt17(s.t) << "\nASCII\n"
      << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nv << " double\n";
  for (const auto& x : mesh.vertices) out << fmt17(x.x()) << ' ' << fmt17(x.y()) << " 0\n";
  const int nt = mesh.num_triangles();
  out << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << nt << '\n';
  for (int t = 0; t < nt; ++t) out << "5\n";

  out << "POINT_DATA " << nv << '\n';
  scalar_block(out, "phi", s.phi, 0, nv);
  scalar_block(out, "mu", s.mu, 0, nv);
  scalar_block(out, "sigma", s.sigma, 0, nv);
  scalar_block(out, "p", s.p, 0, nv);
  scalar_block(out, "B_xx", s.B, 0, nv);
  scalar_block(out, "B_xy", s.B, nv, nv);
  scalar_block(out, "B_yy", s.B, 2 * nv, nv);
  Vec tel(nv);
  for (int i = 0; i < nv; ++i) {
    tel[i] = elastic_stress(s.B_at(i), kappa_of(s.phi[i], p)).norm();
  }
  scalar_block(out, "Tel", tel, 0, nv);
  out << "VECTORS v double\n";
  for (int i = 0; i < nv; ++i) {
    out << fmt17(s.v[i]) << ' ' << fmt17(s.v[d.np2 + i]) << " 0\n";
  }
}

VtkData read_vtk(std::istream& in) {
  VtkData data;
  std::string tok;
  auto expect = [&](bool ok, const char* what) {
    if (!ok) throw InvalidState(std::string("vtk: malformed ") + what);
  };
  int npoint_data = 0;
  while (in >> tok) {
    if (tok == "POINTS") {
      int n;
      std::string type;
      expect(static_cast<bool>(in >> n >> type), "POINTS");
      data.points.resize(n);
      for (auto& x : data.points) {
        double z;
        expect(static_cast<bool>(in >> x.x() >> x.y() >> z), "point");
      }
    } else if (tok == "CELLS") {
      int n, total;
      expect(static_cast<bool>(in >> n >> total), "CELLS");
      data.cells.resize(n);
      for (auto& c : data.cells) {
        int k;
        expect(static_cast<bool>(in >> k >> c[0] >> c[1] >> c[2]) && k == 3, "cell");
      }
    } else if (tok == "CELL_TYPES") {
      int n, type;
      expect(static_cast<bool>(in >> n), "CELL_TYPES");
      for (int i = 0; i < n; ++i) expect(static_cast<bool>(in >> type), "cell type");
    } else if (tok == "POINT_DATA") {
      expect(static_cast<bool>(in >> npoint_data), "POINT_DATA");
    } else if (tok == "SCALARS") {
      std::string name, type, lt, table;
      int nc;
      expect(static_cast<bool>(in >> name >> type >> nc >> lt >> table), "SCALARS");
      auto& v = data.scalars[name];
      v.resize(npoint_data);
      for (auto& x : v) expect(static_cast<bool>(in >> x), "scalar value");
    } else if (tok == "VECTORS") {
      std::string name, type;
      expect(static_cast<bool>(in >> name >> type), "VECTORS");
      auto& v = data.vectors[name];
      v.resize(npoint_data);
      for (auto& x : v) {
        double z;
        expect(static_cast<bool>(in >> x.x() >> x.y() >> z), "vector value");
      }
    }
  }
  return data;
}

double max_elastic_stress(const State& s, const ModelParams& p) {
  double m = 0.0;
  for (int i = 0; i < s.phi.size(); ++i) {
    m = std::max(m, elastic_stress(s.B_at(i), kappa_of(s.phi[i], p)).norm());
  }
  return m;
}

double tumour_mass(const LumpedMass& lm, const Vec& phi) {
  return 0.5 * (lm.weights.sum() + lm.weights.dot(phi));
}

MonitorRecord make_monitor(const Discretization& d, const State& s, const ModelParams& p) {
  MonitorRecord r;
  r.step = s.step;
  r.t = s.t;
  r.energy = discrete_energy(s, *d.mesh, d.edges, p);
  double me = std::numeric_limits<double>::infinity();
  for (int i = 0; i < d.nv; ++i) me = std::min(me, min_eigenvalue(s.B_at(i)));
  r.min_eig_B = me;
  r.max_Tel = max_elastic_stress(s, p);
  r.mass = tumour_mass(d.lumped, s.phi);
  r.div_residual = divergence_residual(d, s.v);
  return r;
}

const std::string& monitor_csv_header() {
  static const std::string h =
      "t,F_total,F_psi,F_grad,F_sigma,F_chem,F_kin,F_elastic,minEigB,maxTel,mass,divres";
  return h;
}

std::string monitor_csv_row(const MonitorRecord& r) {
  const Energy& e = r.energy;
  std::ostringstream os;
  os << fmt17(r.t);
  for (double x : {e.total, e.psi, e.grad, e.sigma, e.chem, e.kin, e.elastic, r.min_eig_B,
                   r.max_Tel, r.mass, r.div_residual}) {
    os << ',' << fmt17(x);
  }
  return os.str();
}

const std::string& steps_csv_header() {
  static const std::string h =
      "step,t,dt,newton,ch_linear,nutrient,saddle,oldroyd,newton_res,nutrient_res,saddle_res,"
      "oldroyd_res,divres,F_before,F_after,minEigB,wall_ms";
  return h;
}

std::string steps_csv_row(const StepReport& r) {
  std::ostringstream os;
  os << r.step << ',' << fmt17(r.t) << ',' << fmt17(r.dt) << ',' << r.newton_iterations << ','
     << r.ch_linear_iterations << ',' << r.nutrient_iterations << ',' << r.saddle_iterations
     << ',' << r.oldroyd_iterations << ','
     << fmt17(r.newton_history.empty() ? 0.0 : r.newton_history.back());
  for (double x : {r.nutrient_residual, r.saddle_residual, r.oldroyd_residual, r.div_residual,
                   r.energy_before, r.energy_after, r.min_eig_B}) {
    os << ',' << fmt17(x);
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, ",%.1f", r.wall_ms);
  os << buf;
  return os.str();
}

const Vec& Checkpoint::field(const std::string& name) const {
  for (const auto& f : fields) {
    if (f.name == name) return f.data;
  }
  throw InvalidState("checkpoint has no field '" + name + "'");
}

void write_checkpoint(const Checkpoint& c, std::ostream& out) {
  using namespace detail;
  if (!c.hierarchy) throw InvalidState("checkpoint without mesh hierarchy");
  out.write("VECH", 4);
  write_pod<std::uint32_t>(out, c.version);
  write_pod<std::int64_t>(out, c.step);
  write_pod(out, c.t);
  write_pod(out, c.dt);
  write_string(out, c.config_text);
  c.hierarchy->save(out);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.fields.size()));
  for (const auto& f : c.fields) {
    write_string(out, f.name);
    write_pod<std::int32_t>(out, f.components);
    write_vector(out, std::vector<double>(f.data.data(), f.data.data() + f.data.size()));
  }
  if (!out) throw InvalidState("checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  using namespace detail;
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "VECH") throw InvalidState("not a checkpoint file");
  Checkpoint c;
  c.version = read_pod<std::uint32_t>(in);
  if (c.version != Checkpoint::kVersion) {
    throw InvalidState("checkpoint version " + std::to_string(c.version) +
                       " does not match supported version " +
                       std::to_string(Checkpoint::kVersion));
  }
  c.step = static_cast<int>(read_pod<std::int64_t>(in));
  c.t = read_pod<double>(in);
  c.dt = read_pod<double>(in);
  c.config_text = read_string(in);
  c.hierarchy = std::make_shared<MeshHierarchy>(MeshHierarchy::load(in));
  const auto nf = read_pod<std::uint32_t>(in);
  for (std::uint32_t k = 0; k < nf; ++k) {
    NamedField f;
    f.name = read_string(in);
    f.components = read_pod<std::int32_t>(in);
    const auto v = read_vector<double>(in);
    f.data = Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
    c.fields.push_back(std::move(f));
  }
  return c;
}

}  // namespace vech
