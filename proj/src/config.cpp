#include "vech/config.hpp"

#include "vech/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace vech {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::pair<std::string, std::string> split_assignment(const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw InvalidConfig("expected key=value, got '" + line + "'");
  std::string key = trim(line.substr(0, eq));
  std::string value = trim(line.substr(eq + 1));
  if (key.empty()) throw InvalidConfig("empty key in '" + line + "'");
  return {key, value};
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line, section, profile;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw InvalidConfig("line " + std::to_string(lineno) + ": unterminated section");
      }
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.rfind("profile ", 0) == 0) {
        profile = trim(name.substr(8));
        section.clear();
        c.profiles_[profile];
      } else {
        profile.clear();
        section = name;
      }
      continue;
    }
    auto [key, value] = split_assignment(line);
    if (!profile.empty()) {
      c.profiles_[profile][key] = value;
    } else {
      c.values_[section.empty() ? key : section + "." + key] = value;
    }
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidConfig("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& assignment) {
  auto [key, value] = split_assignment(assignment);
  set(key, value);
}

void Config::set(const std::string& key, const std::string& value) {
  values_[key] = value;
  overrides_[key] = value;
}

const std::string& Config::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InvalidConfig("missing key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = raw(key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidConfig("key '" + key + "': not a number: '" + s + "'");
  }
}

int Config::get_int(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const double v = get_double(key, fallback);
  if (v != std::floor(v)) throw InvalidConfig("key '" + key + "': not an integer");
  return static_cast<int>(v);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string s = raw(key);
  std::transform(s.begin(), s.end(), s.begin(), ::tolower);
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw InvalidConfig("key '" + key + "': not a boolean: '" + s + "'");
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

Config Config::resolved() const {
  Config out;
  out.values_ = values_;
  const auto it = values_.find("run.profile");
  // an already resolved config carries no profile blocks
  if (it != values_.end() && !it->second.empty() && !profiles_.empty()) {
    const auto p = profiles_.find(it->second);
    if (p == profiles_.end()) throw InvalidConfig("unknown profile '" + it->second + "'");
    for (const auto& [k, v] : p->second) out.values_[k] = v;
    for (const auto& [k, v] : overrides_) out.values_[k] = v;
  }
  return out;
}

std::string Config::text() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
  return os.str();
}

int RunConfig::num_steps() const {
  const double n = model.t_end / model.dt;
  const long r = std::lround(n);
  if (std::abs(r * model.dt - model.t_end) > 1e-12 * std::max(1.0, model.t_end)) {
    throw InvalidConfig("t_end is not a multiple of dt");
  }
  return static_cast<int>(r);
}

void RunConfig::validate() const {
  if (!(model.dt > 0.0)) throw InvalidConfig("dt must be positive");
  if (model.t_end < 0.0) throw InvalidConfig("t_end must be non-negative");
  num_steps();
  if (output_every < 0 || checkpoint_every < 0) throw InvalidConfig("cadence must be >= 0");
  if (threads < 1) throw InvalidConfig("threads must be >= 1");
  try {
    mesh.validate();
  } catch (const InvalidArgument& e) {
    throw InvalidConfig(e.what());
  }
  solver.ch.validate();
  solver.nutrient.validate();
  solver.saddle.validate();
  solver.oldroyd.validate();
  for (const LinearConfig* l : {&solver.ch, &solver.nutrient, &solver.oldroyd}) {
    if (l->precond == PrecondKind::Block) {
      throw InvalidConfig("precond = block is only valid for solver.saddle");
    }
  }
}

namespace {

void read_linear(const Config& c, const std::string& prefix, LinearConfig& l) {
  if (c.has(prefix + ".kind")) l.kind = parse_krylov(c.raw(prefix + ".kind"));
  if (c.has(prefix + ".precond")) l.precond = parse_precond(c.raw(prefix + ".precond"));
  l.rtol = c.get_double(prefix + ".rtol", l.rtol);
  l.atol = c.get_double(prefix + ".atol", l.atol);
  l.max_iter = c.get_int(prefix + ".max_iter", l.max_iter);
  l.restart = c.get_int(prefix + ".restart", l.restart);
}

std::set<std::string> known_keys() {
  std::set<std::string> k = {
      "model.epsilon", "model.beta", "model.chi_phi", "model.chi_sigma", "model.K",
      "model.kappa", "model.kappa_1", "model.kappa_m1", "model.alpha", "model.P",
      "model.A_apop", "model.C", "model.G", "model.m0", "model.n0", "model.eta_1",
      "model.eta_m1", "model.tau_over_kappa_1", "model.tau_over_kappa_m1",
      "model.sigma_infty", "model.growth_source", "model.phase_dependent_kappa",
      "model.potential", "time.dt", "time.t_end", "mesh.box_min", "mesh.box_max",
      "mesh.coarse_n", "mesh.fine_n", "mesh.band_delta", "mesh.adapt", "solver.newton.rtol",
      "solver.newton.atol", "solver.newton.max_iter", "solver.newton.backtrack",
      "solver.newton.max_backtracks", "solver.outer_sweeps", "solver.lump_oldroyd",
      "solver.max_retries", "init.sigma0", "init.sigma0_value", "init.radius_scale",
      "init.amplitude", "init.mode", "run.output_every", "run.checkpoint_every",
      "run.output_dir", "run.tag", "run.profile", "run.freeze_sigma", "run.freeze_v",
      "run.freeze_B", "run.clip_B", "run.enforce_cfl", "run.c_star", "run.C_tr", "run.threads",
      "run.quiet"};
  for (const char* b : {"ch", "nutrient", "saddle", "oldroyd"}) {
    for (const char* f : {"kind", "precond", "rtol", "atol", "max_iter", "restart"}) {
      k.insert(std::string("solver.") + b + "." + f);
    }
  }
  return k;
}

}  // namespace

RunConfig run_config_from(const Config& raw_config) {
  const Config c = raw_config.resolved();
  static const std::set<std::string> known = known_keys();
  for (const auto& [k, v] : c.values()) {
    if (!known.count(k)) throw InvalidConfig("unknown config key '" + k + "'");
  }
  RunConfig r;
  ModelParams& m = r.model;
  m.epsilon = c.get_double("model.epsilon", m.epsilon);
  m.beta = c.get_double("model.beta", m.beta);
  m.chi_phi = c.get_double("model.chi_phi", m.chi_phi);
  m.chi_sigma = c.get_double("model.chi_sigma", m.chi_sigma);
  m.K = c.get_double("model.K", m.K);
  m.kappa = c.get_double("model.kappa", m.kappa);
  m.kappa_1 = c.get_double("model.kappa_1", m.kappa);
  m.kappa_m1 = c.get_double("model.kappa_m1", m.kappa);
  m.alpha = c.get_double("model.alpha", m.alpha);
  m.P = c.get_double("model.P", m.P);
  m.A_apop = c.get_double("model.A_apop", m.A_apop);
  m.C = c.get_double("model.C", m.C);
  m.G = c.get_double("model.G", m.G);
  m.m0 = c.get_double("model.m0", m.m0);
  m.n0 = c.get_double("model.n0", m.n0);
  m.eta_1 = c.get_double("model.eta_1", m.eta_1);
  m.eta_m1 = c.get_double("model.eta_m1", m.eta_m1);
  m.tau_over_kappa_1 = c.get_double("model.tau_over_kappa_1", m.tau_over_kappa_1);
  m.tau_over_kappa_m1 = c.get_double("model.tau_over_kappa_m1", m.tau_over_kappa_m1);
  m.sigma_infty = c.get_double("model.sigma_infty", m.sigma_infty);
  m.growth_source = c.get_bool("model.growth_source", m.growth_source);
  m.phase_dependent_kappa = c.get_bool("model.phase_dependent_kappa", m.phase_dependent_kappa);
  const std::string pot = c.get_string("model.potential", "modified");
  if (pot == "modified") {
    m.potential = Potential::Modified;
  } else if (pot == "quartic") {
    m.potential = Potential::Quartic;
  } else {
    throw InvalidConfig("unknown potential '" + pot + "'");
  }
  m.dt = c.get_double("time.dt", m.dt);
  m.t_end = c.get_double("time.t_end", m.t_end);

  const double lo = c.get_double("mesh.box_min", r.box.x0);
  const double hi = c.get_double("mesh.box_max", r.box.x1);
  r.box = Box{lo, lo, hi, hi};
  r.mesh.coarse_n = c.get_int("mesh.coarse_n", r.mesh.coarse_n);
  r.mesh.fine_n = c.get_int("mesh.fine_n", r.mesh.fine_n);
  r.mesh.band_delta = c.get_double("mesh.band_delta", r.mesh.band_delta);
  r.adapt = c.get_bool("mesh.adapt", r.adapt);

  SolverConfig& s = r.solver;
  read_linear(c, "solver.ch", s.ch);
  read_linear(c, "solver.nutrient", s.nutrient);
  read_linear(c, "solver.saddle", s.saddle);
  read_linear(c, "solver.oldroyd", s.oldroyd);
  s.newton.rtol = c.get_double("solver.newton.rtol", s.newton.rtol);
  s.newton.atol = c.get_double("solver.newton.atol", s.newton.atol);
  s.newton.max_iter = c.get_int("solver.newton.max_iter", s.newton.max_iter);
  s.newton.backtrack = c.get_double("solver.newton.backtrack", s.newton.backtrack);
  s.newton.max_backtracks = c.get_int("solver.newton.max_backtracks", s.newton.max_backtracks);
  s.outer_sweeps = c.get_int("solver.outer_sweeps", s.outer_sweeps);
  s.lump_oldroyd_products = c.get_bool("solver.lump_oldroyd", s.lump_oldroyd_products);
  r.max_retries = c.get_int("solver.max_retries", r.max_retries);

  const std::string s0 = c.get_string("init.sigma0", "quasi_static");
  if (s0 == "quasi_static") {
    r.init.sigma0 = SigmaInit::QuasiStatic;
  } else if (s0 == "projection") {
    r.init.sigma0 = SigmaInit::Projection;
  } else {
    throw InvalidConfig("unknown init.sigma0 '" + s0 + "'");
  }
  r.init.sigma0_value = c.get_double("init.sigma0_value", r.init.sigma0_value);
  r.init.radius_scale = c.get_double("init.radius_scale", r.init.radius_scale);
  r.init.amplitude = c.get_double("init.amplitude", r.init.amplitude);
  r.init.mode = c.get_int("init.mode", r.init.mode);

  r.output_every = c.get_int("run.output_every", r.output_every);
  r.checkpoint_every = c.get_int("run.checkpoint_every", r.checkpoint_every);
  r.output_dir = c.get_string("run.output_dir", r.output_dir);
  r.tag = c.get_string("run.tag", r.tag);
  r.flags.freeze_sigma = c.get_bool("run.freeze_sigma", false);
  r.flags.freeze_v = c.get_bool("run.freeze_v", false);
  r.flags.freeze_B = c.get_bool("run.freeze_B", false);
  r.clip_B = c.get_double("run.clip_B", r.clip_B);
  r.enforce_cfl = c.get_double("run.enforce_cfl", r.enforce_cfl);
  r.c_star = c.get_double("run.c_star", r.c_star);
  r.C_tr = c.get_double("run.C_tr", r.C_tr);
  r.threads = c.get_int("run.threads", r.threads);
  r.quiet = c.get_bool("run.quiet", r.quiet);
  r.validate();
  return r;
}

}  // namespace vech

namespace vech {

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_linear(Config& c, const std::string& prefix, const LinearConfig& l) {
  c.set(prefix + ".kind", to_string(l.kind));
  c.set(prefix + ".precond", to_string(l.precond));
  c.set(prefix + ".rtol", num(l.rtol));
  c.set(prefix + ".atol", num(l.atol));
  c.set(prefix + ".max_iter", std::to_string(l.max_iter));
  c.set(prefix + ".restart", std::to_string(l.restart));
}

}  // namespace

Config to_config(const RunConfig& r) {
  Config c;
  const ModelParams& m = r.model;
  const std::pair<const char*, double> model[] = {
      {"epsilon", m.epsilon}, {"beta", m.beta}, {"chi_phi", m.chi_phi},
      {"chi_sigma", m.chi_sigma}, {"K", m.K}, {"kappa", m.kappa}, {"kappa_1", m.kappa_1},
      {"kappa_m1", m.kappa_m1}, {"alpha", m.alpha}, {"P", m.P}, {"A_apop", m.A_apop},
      {"C", m.C}, {"G", m.G}, {"m0", m.m0}, {"n0", m.n0}, {"eta_1", m.eta_1},
      {"eta_m1", m.eta_m1}, {"tau_over_kappa_1", m.tau_over_kappa_1},
      {"tau_over_kappa_m1", m.tau_over_kappa_m1}, {"sigma_infty", m.sigma_infty}};
  for (const auto& [k, v] : model) c.set(std::string("model.") + k, num(v));
  c.set("model.growth_source", m.growth_source ? "true" : "false");
  c.set("model.phase_dependent_kappa", m.phase_dependent_kappa ? "true" : "false");
  c.set("model.potential", m.potential == Potential::Modified ? "modified" : "quartic");
  c.set("time.dt", num(m.dt));
  c.set("time.t_end", num(m.t_end));
  if (r.box.x0 != r.box.y0 || r.box.x1 != r.box.y1) {
    throw InvalidConfig("only square boxes can be written to a config");
  }
  c.set("mesh.box_min", num(r.box.x0));
  c.set("mesh.box_max", num(r.box.x1));
  c.set("mesh.coarse_n", std::to_string(r.mesh.coarse_n));
  c.set("mesh.fine_n", std::to_string(r.mesh.fine_n));
  c.set("mesh.band_delta", num(r.mesh.band_delta));
  c.set("mesh.adapt", r.adapt ? "true" : "false");
  write_linear(c, "solver.ch", r.solver.ch);
  write_linear(c, "solver.nutrient", r.solver.nutrient);
  write_linear(c, "solver.saddle", r.solver.saddle);
  write_linear(c, "solver.oldroyd", r.solver.oldroyd);
  c.set("solver.newton.rtol", num(r.solver.newton.rtol));
  c.set("solver.newton.atol", num(r.solver.newton.atol));
  c.set("solver.newton.max_iter", std::to_string(r.solver.newton.max_iter));
  c.set("solver.newton.backtrack", num(r.solver.newton.backtrack));
  c.set("solver.newton.max_backtracks", std::to_string(r.solver.newton.max_backtracks));
  c.set("solver.outer_sweeps", std::to_string(r.solver.outer_sweeps));
  c.set("solver.lump_oldroyd", r.solver.lump_oldroyd_products ? "true" : "false");
  c.set("solver.max_retries", std::to_string(r.max_retries));
  c.set("init.sigma0", r.init.sigma0 == SigmaInit::QuasiStatic ? "quasi_static" : "projection");
  c.set("init.sigma0_value", num(r.init.sigma0_value));
  c.set("init.radius_scale", num(r.init.radius_scale));
  c.set("init.amplitude", num(r.init.amplitude));
  c.set("init.mode", std::to_string(r.init.mode));
  c.set("run.output_every", std::to_string(r.output_every));
  c.set("run.checkpoint_every", std::to_string(r.checkpoint_every));
  c.set("run.output_dir", r.output_dir);
  c.set("run.tag", r.tag);
  c.set("run.freeze_sigma", r.flags.freeze_sigma ? "true" : "false");
  c.set("run.freeze_v", r.flags.freeze_v ? "true" : "false");
  c.set("run.freeze_B", r.flags.freeze_B ? "true" : "false");
  c.set("run.clip_B", num(r.clip_B));
  c.set("run.enforce_cfl", num(r.enforce_cfl));
  c.set("run.c_star", num(r.c_star));
  c.set("run.C_tr", num(r.C_tr));
  c.set("run.threads", std::to_string(r.threads));
  c.set("run.quiet", r.quiet ? "true" : "false");
  return c;
}

}  // namespace vech
