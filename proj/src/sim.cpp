#include "vech/sim.hpp"

#include "vech/errors.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace vech {

namespace fs = std::filesystem;

namespace {

std::uint64_t pair_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

ValidationOptions validation_options(const RunConfig& cfg) {
  ValidationOptions o;
  o.h_min = cfg.box.width() / cfg.mesh.fine_n;
  o.c_star = cfg.enforce_cfl > 0 ? cfg.enforce_cfl : cfg.c_star;
  o.C_tr = cfg.C_tr;
  o.enforce_cfl = cfg.enforce_cfl > 0;
  return o;
}

SolverConfig robust(SolverConfig s) {
  for (LinearConfig* l : {&s.ch, &s.saddle, &s.oldroyd}) {
    l->kind = KrylovKind::GMRES;
    l->precond = PrecondKind::LU;
    l->max_iter *= 2;
  }
  s.nutrient.precond = PrecondKind::LU;
  s.newton.max_iter *= 2;
  s.newton.max_backtracks += 4;
  return s;
}

}  // namespace

int transfer_state(const Discretization& from, const Discretization& to, const Transfer& tr,
                   State& s) {
  s.phi = tr.apply_p1(s.phi);
  s.mu = tr.apply_p1(s.mu);
  s.sigma = tr.apply_p1(s.sigma);
  s.p = tr.apply_p1(s.p);
  s.B = tr.apply_p1(s.B, 3);
  int projected = 0;
  for (int i = 0; i < to.nv; ++i) {
    const Sym2 b = s.B_at(i);
    if (min_eigenvalue(b) < -1e-12) {
      s.set_B(i, spectral_apply([](double x) { return std::max(x, 0.0); }, b));
      ++projected;
    }
  }

  // P2 velocity: copy coinciding nodes, interpolate the rest from the old field
  const Vec& v_old = s.v;
  Vec v(2 * to.np2);
  std::unordered_map<std::uint64_t, int> old_edges;
  for (int e = 0; e < from.edges.num_edges(); ++e) {
    old_edges[pair_key(from.edges.edges[e][0], from.edges.edges[e][1])] = e;
  }
  const auto coords = p2_node_coordinates(*to.mesh, to.edges);
  std::unique_ptr<PointLocator> locator;
  for (int n = 0; n < to.np2; ++n) {
    int old_node = -1;
    if (n < to.nv) {
      old_node = tr.old_vertex[n];
    } else {
      const auto& e = to.edges.edges[n - to.nv];
      const int a = tr.old_vertex[e[0]], b = tr.old_vertex[e[1]];
      if (a >= 0 && b >= 0) {
        const auto it = old_edges.find(pair_key(a, b));
        if (it != old_edges.end()) old_node = from.nv + it->second;
      }
    }
    if (old_node >= 0) {
      v[n] = v_old[old_node];
      v[to.np2 + n] = v_old[from.np2 + old_node];
      continue;
    }
    if (!locator) locator = std::make_unique<PointLocator>(*from.mesh);
    const auto hit = locator->locate(coords[n]);
    if (!hit) throw InvalidState("transfer: node outside the previous mesh");
    const Vec2 val = eval_p2_vector(*from.mesh, from.edges, v_old, hit->triangle, hit->barycentric);
    v[n] = val.x();
    v[to.np2 + n] = val.y();
  }
  for (int n = 0; n < to.np2; ++n) {
    if (to.p2_boundary[n]) v[n] = v[to.np2 + n] = 0.0;
  }
  s.v = std::move(v);
  return projected;
}

void Simulation::logf(const std::string& msg) const {
  if (log_ && !cfg_.quiet) *log_ << msg << '\n';
}

void Simulation::setup_constants() {
  Eigen::setNbThreads(cfg_.threads);
  const ValidationOptions opt = validation_options(cfg_);
  validation_ = validate_params(cfg_.model, opt);
  if (!validation_.ok()) {
    throw InvalidConfig("configuration rejected:\n" + validation_.text());
  }
  constants_ = validation_.constants;
  if (cfg_.model.phase_dependent_kappa) {
    logf("notice: phase-dependent kappa relaxes the constant-kappa assumption");
  }
  for (const auto& item : validation_.items) {
    if (!item.pass && !item.hard) logf("advisory: " + item.name + " fails (" + item.detail + ")");
  }
}

Simulation::Simulation(RunConfig cfg, std::ostream* log) : cfg_(std::move(cfg)), log_(log) {
  cfg_.validate();
  config_text_ = to_config(cfg_).text();
  setup_constants();
  hier_ = std::make_shared<MeshHierarchy>(cfg_.box, cfg_.mesh.coarse_n);
  const auto exact = phi0_function(cfg_.init, cfg_.model.epsilon);
  if (cfg_.adapt) {
    for (int pass = 0; pass < 2; ++pass) {
      const Vec phi = nodal_interpolate(*hier_->mesh(), exact);
      hier_->adapt_to_band(std::span<const double>(phi.data(), phi.size()), cfg_.mesh, exact);
    }
  }
  disc_ = std::make_unique<Discretization>(hier_->mesh());
  state_ = make_initial_state(*disc_, cfg_.init, cfg_.model, cfg_.solver.nutrient);
  refresh_monitor();
  std::ostringstream os;
  os << "initial mesh: " << disc_->mesh->num_triangles() << " triangles, " << disc_->nv
     << " vertices, h_min " << disc_->mesh->h_min();
  logf(os.str());
}

Simulation Simulation::from_checkpoint(const Checkpoint& ckpt,
                                       const std::vector<std::string>& overrides,
                                       bool allow_dt_change, std::ostream* log) {
  Config c = Config::parse(ckpt.config_text);
  for (const auto& o : overrides) c.set(o);
  Simulation sim;
  sim.log_ = log;
  sim.cfg_ = run_config_from(c);
  sim.config_text_ = to_config(sim.cfg_).text();
  if (sim.cfg_.model.dt != ckpt.dt && !allow_dt_change) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "resume refused: dt %.17g differs from checkpoint dt %.17g "
                  "(pass --allow-dt-change to override)",
                  sim.cfg_.model.dt, ckpt.dt);
    throw InvalidConfig(buf);
  }
  sim.setup_constants();
  sim.hier_ = std::make_shared<MeshHierarchy>(*ckpt.hierarchy);
  sim.disc_ = std::make_unique<Discretization>(sim.hier_->mesh());
  State& s = sim.state_;
  s.phi = ckpt.field("phi");
  s.mu = ckpt.field("mu");
  s.sigma = ckpt.field("sigma");
  s.p = ckpt.field("p");
  s.v = ckpt.field("v");
  s.B = ckpt.field("B");
  s.t = ckpt.t;
  s.step = ckpt.step;
  const int nv = sim.disc_->nv;
  if (s.phi.size() != nv || s.B.size() != 3 * nv || s.v.size() != 2 * sim.disc_->np2) {
    throw InvalidState("checkpoint fields do not match the stored mesh");
  }
  sim.refresh_monitor();
  return sim;
}

Checkpoint Simulation::checkpoint() const {
  Checkpoint c;
  c.step = state_.step;
  c.t = state_.t;
  c.dt = cfg_.model.dt;
  c.config_text = config_text_;
  c.hierarchy = hier_;
  c.fields = {{"phi", 1, state_.phi}, {"mu", 1, state_.mu}, {"sigma", 1, state_.sigma},
              {"p", 1, state_.p},     {"v", 2, state_.v},   {"B", 3, state_.B}};
  return c;
}

void Simulation::refresh_monitor() {
  monitor_ = make_monitor(*disc_, state_, cfg_.model);
  monitor_.dt_star_margin = constants_.dt_star - cfg_.model.dt;
  monitor_.cfl_ok = cfg_.model.dt <= constants_.cfl_threshold;
}

bool Simulation::adapt() {
  if (!cfg_.adapt) return false;
  const Transfer tr =
      hier_->adapt_to_band(std::span<const double>(state_.phi.data(), state_.phi.size()),
                           cfg_.mesh);
  if (tr.is_identity()) return false;
  auto next = std::make_unique<Discretization>(hier_->mesh());
  const int projected = transfer_state(*disc_, *next, tr, state_);
  if (projected > 0) {
    logf("warning: step " + std::to_string(state_.step) + ": projected B at " +
         std::to_string(projected) + " vertices after transfer");
  }
  disc_ = std::move(next);
  return true;
}

const StepReport& Simulation::step() {
  adapt();
  SolverConfig solver = cfg_.solver;
  for (int attempt = 0;; ++attempt) {
    try {
      state_ = advance_step(state_, *disc_, cfg_.model, solver, cfg_.flags, report_);
      break;
    } catch (const SolverFailure& e) {
      if (attempt >= cfg_.max_retries) throw;
      logf(std::string("retrying step after solver failure: ") + e.what());
    } catch (const NonConvergence& e) {
      if (attempt >= cfg_.max_retries) throw;
      logf(std::string("retrying step after Newton failure: ") + e.what());
    }
    solver = robust(solver);
  }
  if (cfg_.clip_B > 0.0) {
    int clipped = 0;
    for (int i = 0; i < disc_->nv; ++i) {
      const Sym2 b = state_.B_at(i);
      if (min_eigenvalue(b) < cfg_.clip_B) {
        const double d = cfg_.clip_B;
        state_.set_B(i, spectral_apply([d](double x) { return beta_delta(x, d); }, b));
        ++clipped;
      }
    }
    if (clipped > 0) {
      logf("clip-B: step " + std::to_string(state_.step) + ": cut off B at " +
           std::to_string(clipped) + " vertices");
    }
  }
  refresh_monitor();
  return report_;
}

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  Config c = Config::load(path);
  for (const auto& o : overrides) c.set(o);
  return c;
}

namespace {

// Keeps the header and the first `rows` data rows of a CSV file.
void truncate_csv(const fs::path& file, int rows) {
  std::ifstream in(file);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line) && static_cast<int>(lines.size()) < rows + 1) {
    lines.push_back(line);
  }
  in.close();
  std::ofstream out(file, std::ios::trunc);
  for (const auto& l : lines) out << l << '\n';
}

std::string numbered(const std::string& stem, int step, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06d%s", stem.c_str(), step, ext);
  return buf;
}

}  // namespace

RunResult run_to_end(Simulation& sim, std::ostream* log) {
  const RunConfig& cfg = sim.config();
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  const fs::path mon_path = dir / "monitors.csv";
  const fs::path steps_path = dir / "steps.csv";
  const int start = sim.state().step;

  if (start == 0 || !fs::exists(mon_path)) {
    std::ofstream(mon_path, std::ios::trunc) << monitor_csv_header() << '\n';
    std::ofstream(steps_path, std::ios::trunc) << steps_csv_header() << '\n';
  } else {
    // rows 0..start are the initial record plus one per completed step
    truncate_csv(mon_path, start + 1);
    if (fs::exists(steps_path)) truncate_csv(steps_path, start);
  }
  std::ofstream mon(mon_path, std::ios::app);
  std::ofstream steps(steps_path, std::ios::app);
  if (start == 0) mon << monitor_csv_row(sim.monitor()) << '\n';

  auto write_fields = [&] {
    std::ofstream f(dir / numbered("state", sim.state().step, ".vtk"));
    write_state_vtk(sim.discretization(), sim.state(), cfg.model, f);
  };
  RunResult res;
  auto write_ckpt = [&] {
    const fs::path p = dir / numbered("checkpoint", sim.state().step, ".vech");
    std::ofstream f(p, std::ios::binary);
    write_checkpoint(sim.checkpoint(), f);
    res.last_checkpoint = p.string();
  };
  if (start == 0 && cfg.output_every > 0) write_fields();

  while (!sim.finished()) {
    try {
      sim.step();
    } catch (const std::exception& e) {
      write_ckpt();
      res.ok = false;
      res.error = e.what();
      if (log) {
        *log << "step " << sim.state().step + 1 << " failed: " << e.what()
             << "\nlast checkpoint: " << res.last_checkpoint << '\n';
      }
      res.final_monitor = sim.monitor();
      return res;
    }
    ++res.steps;
    const int n = sim.state().step;
    mon << monitor_csv_row(sim.monitor()) << '\n';
    steps << steps_csv_row(sim.last_report()) << '\n';
    mon.flush();
    steps.flush();
    if (cfg.output_every > 0 && n % cfg.output_every == 0) write_fields();
    if (cfg.checkpoint_every > 0 && n % cfg.checkpoint_every == 0) write_ckpt();
    if (log && !cfg.quiet) {
      const auto& r = sim.last_report();
      const auto& m = sim.monitor();
      char buf[256];
      std::snprintf(buf, sizeof buf,
                    "step %d t=%.4f nt=%d newton=%d F=%.8e minEigB=%.3e maxTel=%.3e mass=%.6f "
                    "%.0f ms",
                    n, m.t, sim.discretization().mesh->num_triangles(), r.newton_iterations,
                    m.energy.total, m.min_eig_B, m.max_Tel, m.mass, r.wall_ms);
      *log << buf << '\n';
    }
  }
  if (cfg.output_every > 0 && sim.state().step % cfg.output_every != 0) write_fields();
  write_ckpt();
  res.final_monitor = sim.monitor();
  return res;
}

}  // namespace vech
