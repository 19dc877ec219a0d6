#include "dualarm/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace dualarm::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) fail(line, "trailing characters after number '" + v + "'");
    return d;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(line, "expected a number, got '" + v + "'");
  }
}

long long to_ll(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) fail(line, "trailing characters after integer '" + v + "'");
    return i;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(line, "expected an integer, got '" + v + "'");
  }
}

int to_int(const std::string& v, int line) { return static_cast<int>(to_ll(v, line)); }

std::size_t to_size(const std::string& v, int line) {
  const long long i = to_ll(v, line);
  if (i < 0) fail(line, "expected a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(i);
}

bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  fail(line, "expected a boolean (true/false), got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v, int line) {
  std::string body = v;
  if (!body.empty() && body.front() == '[') {
    if (body.back() != ']') fail(line, "unterminated '[' in '" + v + "'");
    body = trim(body.substr(1, body.size() - 2));
  }
  if (body.empty()) return {};
  std::vector<std::string> items;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(line, "empty element in list '" + v + "'");
    items.push_back(item);
  }
  return items;
}

Vec to_vec(const std::string& v, int line) {
  const std::vector<std::string> items = split_list(v, line);
  Vec out(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) out[static_cast<int>(i)] = to_double(items[i], line);
  return out;
}

Vec2 to_vec2(const std::string& v, int line) {
  const Vec w = to_vec(v, line);
  if (w.size() != 2) fail(line, "expected exactly 2 entries in '" + v + "'");
  return {w[0], w[1]};
}

std::vector<std::uint64_t> to_seeds(const std::string& v, int line) {
  const std::vector<std::string> items = split_list(v, line);
  if (items.empty()) fail(line, "seed list must not be empty");
  std::vector<std::uint64_t> out;
  for (const std::string& s : items) {
    const long long i = to_ll(s, line);
    if (i < 0) fail(line, "seeds must be non-negative");
    out.push_back(static_cast<std::uint64_t>(i));
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, int)>;
using C = ExperimentConfig;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> m;
    auto dbl = [&m](const char* k, double C::*f) {
      m[k] = [f](C& c, const std::string& v, int ln) { c.*f = to_double(v, ln); };
    };
    auto itg = [&m](const char* k, int C::*f) {
      m[k] = [f](C& c, const std::string& v, int ln) { c.*f = to_int(v, ln); };
    };
    auto sz = [&m](const char* k, std::size_t C::*f) {
      m[k] = [f](C& c, const std::string& v, int ln) { c.*f = to_size(v, ln); };
    };
    auto bl = [&m](const char* k, bool C::*f) {
      m[k] = [f](C& c, const std::string& v, int ln) { c.*f = to_bool(v, ln); };
    };
    auto vec = [&m](const char* k, Vec C::*f) {
      m[k] = [f](C& c, const std::string& v, int ln) { c.*f = to_vec(v, ln); };
    };
    auto vec2 = [&m](const char* k, Vec2 C::*f) {
      m[k] = [f](C& c, const std::string& v, int ln) { c.*f = to_vec2(v, ln); };
    };

    m["experiment.action_space"] = [](C& c, const std::string& v, int ln) {
      try {
        ctrl::controller_from_string(v);
      } catch (const std::exception&) {
        fail(ln, "unknown action space '" + v + "'");
      }
      c.action_space = v;
    };
    itg("experiment.epochs", &C::epochs);
    m["experiment.seeds"] = [](C& c, const std::string& v, int ln) { c.seeds = to_seeds(v, ln); };
    m["experiment.out_dir"] = [](C& c, const std::string& v, int ln) {
      if (v.empty()) fail(ln, "experiment.out_dir must not be empty");
      c.out_dir = v;
    };
    bl("experiment.long_run", &C::long_run);

    itg("arm.dof", &C::dof);
    vec("arm.lengths", &C::lengths);
    vec("arm.masses", &C::masses);
    vec("arm.inertias", &C::inertias);
    vec("arm.com_offsets", &C::com_offsets);
    vec("arm.friction", &C::friction);
    vec("arm.q_lower", &C::q_lower);
    vec("arm.q_upper", &C::q_upper);
    vec("arm.tau_limit", &C::tau_limit);
    vec2("arm.gravity", &C::gravity);
    dbl("arm.base_span", &C::base_span);

    dbl("env.clearance", &C::clearance);
    dbl("env.peg_width", &C::peg_width);
    dbl("env.peg_length", &C::peg_length);
    dbl("env.hole_depth", &C::hole_depth);
    dbl("env.wall_thickness", &C::wall_thickness);
    dbl("env.success_delta", &C::success_delta);
    dbl("env.angle_weight", &C::angle_weight);
    dbl("env.insertion_fraction", &C::insertion_fraction);
    itg("env.episode_steps", &C::episode_steps);
    itg("env.substeps", &C::substeps);
    dbl("env.sim_dt", &C::sim_dt);
    dbl("env.init_offset_fraction", &C::init_offset_fraction);
    vec("env.q_init", &C::q_init);
    bl("env.peg_on_left", &C::peg_on_left);

    vec("gains.kp_joint", &C::kp_joint);
    vec("gains.kv_joint", &C::kv_joint);
    vec("gains.kp_task", &C::kp_task);
    vec("gains.kv_task", &C::kv_task);
    vec("gains.kp_task_min", &C::kp_task_min);
    vec("gains.kp_task_max", &C::kp_task_max);
    vec("gains.dx_bound", &C::dx_bound);
    dbl("gains.kp_null", &C::kp_null);
    dbl("gains.kv_null", &C::kv_null);
    dbl("gains.dq_bound", &C::dq_bound);

    dbl("contact.stiffness", &C::stiffness);
    dbl("contact.damping", &C::damping);
    dbl("contact.friction_mu", &C::friction_mu);
    dbl("contact.friction_vel", &C::friction_vel);
    dbl("contact.max_penetration", &C::max_penetration);

    dbl("rl.lr", &C::lr);
    dbl("rl.gamma", &C::gamma);
    dbl("rl.polyak", &C::polyak);
    dbl("rl.init_alpha", &C::init_alpha);
    dbl("rl.target_entropy", &C::target_entropy);
    dbl("rl.action_l2", &C::action_l2);
    itg("rl.hidden", &C::hidden);
    itg("rl.q_layers", &C::q_layers);
    itg("rl.pi_layers", &C::pi_layers);
    itg("rl.batch", &C::batch);
    sz("rl.buffer", &C::buffer);
    sz("rl.warmup", &C::warmup);
    itg("rl.her_k", &C::her_k);
    itg("rl.updates_per_epoch", &C::updates_per_epoch);
    itg("rl.eval_every", &C::eval_every);
    itg("rl.eval_cycles", &C::eval_cycles);
    bl("rl.normalize_obs", &C::normalize_obs);
    dbl("rl.stop_success", &C::stop_success);
    itg("rl.patience", &C::patience);

    itg("harness.disturbances", &C::disturbances);
    itg("harness.disturbance_cycles", &C::disturbance_cycles);
    itg("harness.disturbance_bins", &C::disturbance_bins);
    dbl("harness.force_cap", &C::force_cap);
    dbl("harness.torque_cap", &C::torque_cap);
    itg("harness.disturb_start", &C::disturb_start);
    itg("harness.disturb_end", &C::disturb_end);
    vec("harness.offset_magnitudes", &C::offset_magnitudes);
    itg("harness.offset_samples", &C::offset_samples);
    vec2("harness.trace_force", &C::trace_force);
    dbl("harness.trace_torque", &C::trace_torque);
    return m;
  }();
  return table;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt(const Vec& v) {
  std::string s = "[";
  for (int i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += fmt(v[i]);
  }
  return s + "]";
}

std::string fmt(const Vec2& v) { return "[" + fmt(v.x()) + ", " + fmt(v.y()) + "]"; }

std::string fmt(const std::vector<std::uint64_t>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(v[i]);
  }
  return s + "]";
}

std::string fmt(bool b) { return b ? "true" : "false"; }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Vec sized_or(const Vec& v, const Vec& fallback, int n, const std::string& key) {
  if (v.size() == 0) return fallback;
  if (v.size() == 1) return Vec::Constant(n, v[0]);
  if (v.size() == n) return v;
  throw ConfigError(key + " needs 1 or " + std::to_string(n) + " entries, got " +
                    std::to_string(v.size()));
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(bool long_run) {
  ExperimentConfig c;
  c.long_run = long_run;
  c.offset_magnitudes = (Vec(3) << 0.0, 0.005, 0.01).finished();
  if (!long_run) {
    c.epochs = 800;
    c.seeds = {0, 1};
    c.q_init = (Vec(3) << 1.35, -2.1, 0.75).finished();
    return c;
  }
  c.epochs = 10000;
  c.seeds = {0, 1, 2, 3};
  c.dof = 7;
  c.base_span = 2.2;
  c.clearance = 0.002;
  c.episode_steps = 400;
  c.lr = 1e-5;
  c.hidden = 256;
  c.batch = 256;
  c.buffer = 800000;
  c.warmup = 10000;
  c.updates_per_epoch = 1000;
  c.stop_success = 2.0;  // run the full budget
  c.patience = 1;
  c.q_init = (Vec(7) << 0.0, -0.54, 0.0, -2.0, -0.3, 3.14, 1.0).finished();
  return c;
}

dyn::ArmModel ExperimentConfig::arm_model(int side) const {
  require(side == 0 || side == 1, "arm_model: side must be 0 or 1");
  if (dof < 2 || dof > 12) throw ConfigError("arm.dof must be in [2, 12]");
  dyn::ArmModel m = dyn::ArmModel::default_planar(dof);
  m.lengths = sized_or(lengths, m.lengths, dof, "arm.lengths");
  m.masses = sized_or(masses, m.masses, dof, "arm.masses");
  m.inertias = sized_or(inertias, m.inertias, dof, "arm.inertias");
  m.com_offsets = sized_or(com_offsets, m.com_offsets, dof, "arm.com_offsets");
  m.friction = sized_or(friction, m.friction, dof, "arm.friction");
  m.q_lower = sized_or(q_lower, m.q_lower, dof, "arm.q_lower");
  m.q_upper = sized_or(q_upper, m.q_upper, dof, "arm.q_upper");
  m.tau_limit = sized_or(tau_limit, m.tau_limit, dof, "arm.tau_limit");
  m.gravity = gravity;
  if (side == 0) {
    m.base_pos = Vec2(0.0, 0.0);
    m.base_heading = 0.0;
  } else {
    m.base_pos = Vec2(base_span, 0.0);
    m.base_heading = M_PI;
  }
  m.validate();
  return m;
}

ctrl::GainSpec ExperimentConfig::gain_spec() const {
  ctrl::GainSpec g = ctrl::GainSpec::defaults(dof);
  g.kp_joint = sized_or(kp_joint, g.kp_joint, dof, "gains.kp_joint");
  g.kv_joint = sized_or(kv_joint, g.kv_joint, dof, "gains.kv_joint");
  g.kp_task = sized_or(kp_task, g.kp_task, 3, "gains.kp_task");
  g.kv_task = sized_or(kv_task, g.kv_task, 3, "gains.kv_task");
  g.kp_task_min = sized_or(kp_task_min, g.kp_task_min, 3, "gains.kp_task_min");
  g.kp_task_max = sized_or(kp_task_max, g.kp_task_max, 3, "gains.kp_task_max");
  g.dx_bound = sized_or(dx_bound, g.dx_bound, 3, "gains.dx_bound");
  g.kp_null = kp_null;
  g.kv_null = kv_null;
  g.dq_bound = dq_bound;
  g.validate(dof);
  return g;
}

sim::EnvConfig ExperimentConfig::env() const {
  sim::EnvConfig e;
  e.left_arm = arm_model(0);
  e.right_arm = arm_model(1);
  if (q_init.size() != dof)
    throw ConfigError("env.q_init needs exactly " + std::to_string(dof) + " entries, got " +
                      std::to_string(q_init.size()));
  e.q_init_left = q_init;
  e.q_init_right = -q_init;  // mirrored posture under the pi-rotated base
  e.controller = ctrl::controller_from_string(action_space);
  e.gains = gain_spec();
  e.geometry.peg_width = peg_width;
  e.geometry.peg_length = peg_length;
  e.geometry.clearance = clearance;
  e.geometry.hole_depth = hole_depth;
  e.geometry.wall_thickness = wall_thickness;
  e.contact.stiffness = stiffness;
  e.contact.damping = damping;
  e.contact.friction = friction_mu;
  e.contact.friction_vel = friction_vel;
  e.contact.max_penetration = max_penetration;
  e.peg_on_left = peg_on_left;
  e.success_delta = success_delta;
  e.angle_weight = angle_weight;
  e.insertion_fraction = insertion_fraction;
  e.episode_steps = episode_steps;
  e.substeps = substeps;
  e.sim_dt = sim_dt;
  e.init_offset_fraction = init_offset_fraction;
  e.validate();
  return e;
}

rl::AgentConfig ExperimentConfig::agent_config() const {
  const ctrl::ControllerKind kind = ctrl::controller_from_string(action_space);
  rl::AgentConfig a;
  a.obs_dim = 2 * (3 * dof + 3);
  a.goal_dim = 3;
  a.action_dim = ctrl::action_dim(kind, dof);
  a.hidden = hidden;
  a.q_layers = q_layers;
  a.pi_layers = pi_layers;
  a.lr = lr;
  a.gamma = gamma;
  a.polyak = polyak;
  a.init_alpha = init_alpha;
  a.target_entropy = target_entropy;
  a.action_l2 = action_l2;
  // Train on the time-cost form of the success reward: biasing every replay
  // reward by -1 makes the return -(discounted steps to success), so the
  // critic carries a value gradient along reward-free trajectory segments
  // instead of flatlining at zero. Success still terminates the episode
  // (paying 1 - 1 = 0), so the attainable return range is [-1/(1-gamma), 0];
  // clamping the bootstrap target there keeps the critics honest, and the
  // fresh-network output of zero starts optimistic, which favours trying
  // unvisited actions.
  a.reward_bias = -1.0;
  a.target_min = -1.0 / (1.0 - gamma);
  a.target_max = 0.0;
  if (normalize_obs) {
    const dyn::ArmModel left = arm_model(0), right = arm_model(1);
    Vec s(a.obs_dim);
    int off = 0;
    for (const dyn::ArmModel* m : {&left, &right}) {
      for (int j = 0; j < dof; ++j) s[off++] = 0.5;   // q [rad]
      for (int j = 0; j < dof; ++j) s[off++] = 0.25;  // qdot [rad/s]
      for (int j = 0; j < dof; ++j) s[off++] = 1.0 / m->tau_limit[j];
      s[off++] = 1.0;  // ee x [m]
      s[off++] = 1.0;  // ee y [m]
      s[off++] = 0.5;  // ee heading [rad]
    }
    a.obs_scale = s;
    a.goal_scale = Vec::Constant(3, 10.0);  // goal coordinates are centimeter-scale
  }
  a.validate();
  return a;
}

rl::TrainerConfig ExperimentConfig::trainer_config() const {
  rl::TrainerConfig t;
  t.updates_per_epoch = updates_per_epoch;
  t.batch_size = batch;
  t.buffer_capacity = buffer;
  t.warmup_samples = warmup;
  t.her_k = her_k;
  t.eval_every = eval_every;
  t.eval_cycles = eval_cycles;
  t.validate();
  return t;
}

std::uint64_t ExperimentConfig::structural_hash() const {
  const dyn::ArmModel left = arm_model(0);
  const ctrl::GainSpec g = gain_spec();
  std::string s;
  auto add = [&s](const std::string& piece) {
    s += piece;
    s += '|';
  };
  add(action_space);
  add(std::to_string(dof));
  add(std::to_string(hidden));
  add(std::to_string(q_layers));
  add(std::to_string(pi_layers));
  add(fmt(normalize_obs));
  add(fmt(left.lengths));
  add(fmt(left.masses));
  add(fmt(left.inertias));
  add(fmt(left.com_offsets));
  add(fmt(left.friction));
  add(fmt(left.q_lower));
  add(fmt(left.q_upper));
  add(fmt(left.tau_limit));
  add(fmt(left.gravity));
  add(fmt(base_span));
  add(fmt(q_init));
  add(fmt(peg_on_left));
  add(fmt(peg_width));
  add(fmt(peg_length));
  add(fmt(clearance));
  add(fmt(hole_depth));
  add(fmt(wall_thickness));
  add(fmt(success_delta));
  add(fmt(angle_weight));
  add(fmt(insertion_fraction));
  add(std::to_string(substeps));
  add(fmt(sim_dt));
  add(fmt(init_offset_fraction));
  add(fmt(g.kp_joint));
  add(fmt(g.kv_joint));
  add(fmt(Vec(g.kp_task)));
  add(fmt(Vec(g.kv_task)));
  add(fmt(Vec(g.kp_task_min)));
  add(fmt(Vec(g.kp_task_max)));
  add(fmt(Vec(g.dx_bound)));
  add(fmt(g.kp_null));
  add(fmt(g.kv_null));
  add(fmt(g.dq_bound));
  add(fmt(stiffness));
  add(fmt(damping));
  add(fmt(friction_mu));
  add(fmt(friction_vel));
  add(fmt(max_penetration));
  return fnv1a(s);
}

std::string ExperimentConfig::echo() const {
  std::ostringstream os;
  os << "# resolved configuration (re-parseable)\n";
  auto kv = [&os](const char* k, const std::string& v) { os << k << " = " << v << "\n"; };
  kv("experiment.action_space", action_space);
  kv("experiment.epochs", std::to_string(epochs));
  kv("experiment.seeds", fmt(seeds));
  kv("experiment.out_dir", out_dir);
  kv("experiment.long_run", fmt(long_run));
  kv("arm.dof", std::to_string(dof));
  kv("arm.lengths", fmt(lengths));
  kv("arm.masses", fmt(masses));
  kv("arm.inertias", fmt(inertias));
  kv("arm.com_offsets", fmt(com_offsets));
  kv("arm.friction", fmt(friction));
  kv("arm.q_lower", fmt(q_lower));
  kv("arm.q_upper", fmt(q_upper));
  kv("arm.tau_limit", fmt(tau_limit));
  kv("arm.gravity", fmt(gravity));
  kv("arm.base_span", fmt(base_span));
  kv("env.clearance", fmt(clearance));
  kv("env.peg_width", fmt(peg_width));
  kv("env.peg_length", fmt(peg_length));
  kv("env.hole_depth", fmt(hole_depth));
  kv("env.wall_thickness", fmt(wall_thickness));
  kv("env.success_delta", fmt(success_delta));
  kv("env.angle_weight", fmt(angle_weight));
  kv("env.insertion_fraction", fmt(insertion_fraction));
  kv("env.episode_steps", std::to_string(episode_steps));
  kv("env.substeps", std::to_string(substeps));
  kv("env.sim_dt", fmt(sim_dt));
  kv("env.init_offset_fraction", fmt(init_offset_fraction));
  kv("env.q_init", fmt(q_init));
  kv("env.peg_on_left", fmt(peg_on_left));
  kv("gains.kp_joint", fmt(kp_joint));
  kv("gains.kv_joint", fmt(kv_joint));
  kv("gains.kp_task", fmt(kp_task));
  kv("gains.kv_task", fmt(kv_task));
  kv("gains.kp_task_min", fmt(kp_task_min));
  kv("gains.kp_task_max", fmt(kp_task_max));
  kv("gains.dx_bound", fmt(dx_bound));
  kv("gains.kp_null", fmt(kp_null));
  kv("gains.kv_null", fmt(kv_null));
  kv("gains.dq_bound", fmt(dq_bound));
  kv("contact.stiffness", fmt(stiffness));
  kv("contact.damping", fmt(damping));
  kv("contact.friction_mu", fmt(friction_mu));
  kv("contact.friction_vel", fmt(friction_vel));
  kv("contact.max_penetration", fmt(max_penetration));
  kv("rl.lr", fmt(lr));
  kv("rl.gamma", fmt(gamma));
  kv("rl.polyak", fmt(polyak));
  kv("rl.init_alpha", fmt(init_alpha));
  kv("rl.target_entropy", fmt(target_entropy));
  kv("rl.action_l2", fmt(action_l2));
  kv("rl.hidden", std::to_string(hidden));
  kv("rl.q_layers", std::to_string(q_layers));
  kv("rl.pi_layers", std::to_string(pi_layers));
  kv("rl.batch", std::to_string(batch));
  kv("rl.buffer", std::to_string(buffer));
  kv("rl.warmup", std::to_string(warmup));
  kv("rl.her_k", std::to_string(her_k));
  kv("rl.updates_per_epoch", std::to_string(updates_per_epoch));
  kv("rl.eval_every", std::to_string(eval_every));
  kv("rl.eval_cycles", std::to_string(eval_cycles));
  kv("rl.normalize_obs", fmt(normalize_obs));
  kv("rl.stop_success", fmt(stop_success));
  kv("rl.patience", std::to_string(patience));
  kv("harness.disturbances", std::to_string(disturbances));
  kv("harness.disturbance_cycles", std::to_string(disturbance_cycles));
  kv("harness.disturbance_bins", std::to_string(disturbance_bins));
  kv("harness.force_cap", fmt(force_cap));
  kv("harness.torque_cap", fmt(torque_cap));
  kv("harness.disturb_start", std::to_string(disturb_start));
  kv("harness.disturb_end", std::to_string(disturb_end));
  kv("harness.offset_magnitudes", fmt(offset_magnitudes));
  kv("harness.offset_samples", std::to_string(offset_samples));
  kv("harness.trace_force", fmt(trace_force));
  kv("harness.trace_torque", fmt(trace_torque));
  return os.str();
}

void ExperimentConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  check(epochs >= 0, "experiment.epochs must be >= 0");
  check(!seeds.empty(), "experiment.seeds must not be empty");
  check(!out_dir.empty(), "experiment.out_dir must not be empty");
  check(stop_success > 0, "rl.stop_success must be positive");
  check(patience >= 1, "rl.patience must be >= 1");
  check(disturbances >= 1, "harness.disturbances must be >= 1");
  check(disturbance_cycles >= 1, "harness.disturbance_cycles must be >= 1");
  check(disturbance_bins >= 1, "harness.disturbance_bins must be >= 1");
  check(force_cap >= 0 && torque_cap >= 0, "harness force/torque caps must be >= 0");
  check(disturb_start >= 0 && disturb_start < disturb_end,
        "harness disturbance window must satisfy 0 <= start < end");
  check(offset_magnitudes.size() > 0, "harness.offset_magnitudes must not be empty");
  check(offset_magnitudes.minCoeff() >= 0, "harness.offset_magnitudes must be >= 0");
  check(offset_samples >= 1, "harness.offset_samples must be >= 1");
  try {
    env();
    agent_config();
    trainer_config();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& ex) {
    throw ConfigError(std::string("config constraint violated: ") + ex.what());
  }
}

ExperimentConfig parse_config_text(const std::string& text, bool long_run_flag) {
  struct Entry {
    int line;
    std::string key, value;
  };
  std::vector<Entry> entries;
  std::istringstream is(text);
  std::string raw;
  int ln = 0;
  while (std::getline(is, raw)) {
    ++ln;
    std::string s = raw;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(ln, "expected 'key = value', got '" + s + "'");
    Entry e{ln, trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
    if (e.key.empty()) fail(ln, "missing key before '='");
    entries.push_back(std::move(e));
  }

  bool long_run = long_run_flag;
  for (const Entry& e : entries)
    if (e.key == "experiment.long_run") long_run = long_run_flag || to_bool(e.value, e.line);

  ExperimentConfig cfg = ExperimentConfig::defaults(long_run);
  const auto& table = setters();
  for (const Entry& e : entries) {
    const auto it = table.find(e.key);
    if (it == table.end()) fail(e.line, "unknown key '" + e.key + "'");
    it->second(cfg, e.value, e.line);
  }
  cfg.long_run = long_run;
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::string& path, bool long_run_flag) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), long_run_flag);
}

void write_config_echo(const std::string& path, const ExperimentConfig& cfg) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("cannot write config echo to '" + path + "'");
  os << cfg.echo();
  if (!os) throw ConfigError("write failed for '" + path + "'");
}

}  // namespace dualarm::cli
