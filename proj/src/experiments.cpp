#include "dualarm/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace dualarm::harness {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  return os;
}

Vec clamp_unit(const Vec& v) { return v.cwiseMax(-1.0).cwiseMin(1.0); }

// Displacement command for the compliant controllers: full speed while far,
// proportional close in so the spring anchor never leads the arm enough to
// overshoot the alignment band.
Vec3 impedance_step(const Vec3& u) {
  const double dist = u.cwiseAbs().maxCoeff();
  const double scale = std::min(1.0, 0.55 + 0.3 * dist);
  return (scale * u).cwiseMax(-1.0).cwiseMin(1.0);
}

// Damped least-squares joint step realizing a small task-space displacement.
Vec dls_step(const dyn::ArmModel& m, const Vec& q, const Vec3& dx, double damping = 0.01) {
  const Mat J = dyn::jacobian(m, q);
  Mat A = J * J.transpose();
  A.diagonal().array() += damping * damping;
  return J.transpose() * A.ldlt().solve(dx);
}

int run_deterministic(const rl::AgentParams& agent, sim::DualArmEnv& env, std::uint64_t seed,
                      bool* success, std::vector<Vec2>* peg_ee_track) {
  std::mt19937_64 unused(0);
  sim::Observation obs = env.reset(seed);
  const int peg_arm = env.config().peg_on_left ? 0 : 1;
  int steps = 0;
  if (success) *success = false;
  while (true) {
    const Vec a = rl::select_action(agent, obs.state, obs.desired_goal, true, unused);
    const sim::StepResult sr = env.step(a);
    steps += 1;
    if (peg_ee_track) peg_ee_track->push_back(env.ee_pose(peg_arm).pos);
    obs = sr.obs;
    if (sr.done) {
      if (success) *success = sr.info.success;
      return steps;
    }
  }
}

}  // namespace

double success_rate(const rl::AgentParams& agent, const sim::DualArmEnv& env, int cycles,
                    std::uint64_t seed) {
  return rl::evaluate_policy(agent, env, cycles, seed);
}

ScriptedPolicy::ScriptedPolicy(double standoff, double align_tol)
    : standoff_(standoff), align_tol_(align_tol) {
  require(standoff > 0 && align_tol > 0, "scripted policy: parameters must be positive");
}

Vec ScriptedPolicy::act(const sim::DualArmEnv& env) const {
  const sim::EnvConfig& cfg = env.config();
  const int n = cfg.left_arm.dof();
  const int peg_arm = cfg.peg_on_left ? 0 : 1;
  const int hole_arm = 1 - peg_arm;

  const sim::Pose2 tip_in_ee =
      cfg.geometry.peg_mount.compose({{cfg.geometry.peg_length, 0.0}, 0.0});
  const sim::Pose2 hole = env.hole_pose();
  const sim::Pose2 tip = env.peg_pose().compose({{cfg.geometry.peg_length, 0.0}, 0.0});
  const sim::Pose2 rel = hole.inverse().compose(tip);

  // Approach a standoff point on the hole axis; once aligned, drive inward
  // slightly past the insertion target so the success band is crossed. A tip
  // already past the mouth stays committed even if the lateral error wanders,
  // otherwise the retreat-and-retry flip-flops at the alignment boundary.
  const bool aligned = (std::abs(rel.p.y()) < align_tol_ &&
                        std::abs(wrap_angle(rel.th)) < 0.08 &&
                        rel.p.x() > -(standoff_ + 0.01)) ||
                       rel.p.x() > -0.005;
  // Aim at the goal depth itself: overshooting it keeps the position springs
  // loaded at the settle point, and that load leaks into the wrist as a
  // standing angle error.
  const double target_x =
      aligned ? cfg.insertion_fraction * cfg.geometry.hole_depth : -standoff_;
  const sim::Pose2 ee_target =
      hole.compose({{target_x, 0.0}, 0.0}).compose(tip_in_ee.inverse());

  auto arm_of = [&](int arm) -> const dyn::ArmModel& {
    return arm == 0 ? cfg.left_arm : cfg.right_arm;
  };
  auto q_init_of = [&](int arm) -> const Vec& {
    return arm == 0 ? cfg.q_init_left : cfg.q_init_right;
  };

  auto raw_toward = [&](int arm, const Vec3& pose_target) {
    const dyn::EePose now = env.ee_pose(arm);
    Vec3 dx(pose_target[0] - now.pos.x(), pose_target[1] - now.pos.y(),
            wrap_angle(pose_target[2] - now.theta));
    switch (cfg.controller) {
      case ctrl::ControllerKind::JointPosition: {
        const Vec dq = dls_step(arm_of(arm), env.arm_state(arm).q, dx);
        return Vec(clamp_unit(dq / cfg.gains.dq_bound));
      }
      case ctrl::ControllerKind::CartesianImpedance:
        return Vec(impedance_step(dx.cwiseQuotient(cfg.gains.dx_bound)));
      case ctrl::ControllerKind::VariableImpedance: {
        Vec raw(6);
        raw.head(3) = impedance_step(dx.cwiseQuotient(cfg.gains.dx_bound));
        raw.tail(3).setConstant(0.8);  // stiff enough to track and insert
        return raw;
      }
    }
    throw ContractError("scripted policy: unknown controller kind");
  };

  auto raw_hold = [&](int arm) {
    if (cfg.controller == ctrl::ControllerKind::JointPosition) {
      const Vec dq = q_init_of(arm) - env.arm_state(arm).q;
      return Vec(clamp_unit(dq / cfg.gains.dq_bound));
    }
    const dyn::EePose home = dyn::forward_kinematics(arm_of(arm), q_init_of(arm));
    return raw_toward(arm, Vec3(home.pos.x(), home.pos.y(), home.theta));
  };

  const int per = ctrl::arm_action_dim(cfg.controller, n);
  Vec action(2 * per);
  const Vec3 ee_target_vec(ee_target.p.x(), ee_target.p.y(), wrap_angle(ee_target.th));
  action.segment(peg_arm * per, per) = raw_toward(peg_arm, ee_target_vec);
  action.segment(hole_arm * per, per) = raw_hold(hole_arm);
  return action;
}

double scripted_episode(sim::DualArmEnv& env, std::uint64_t seed, int max_steps) {
  const ScriptedPolicy policy;
  env.reset(seed);
  const int cap = max_steps > 0 ? max_steps : env.config().episode_steps;
  double reward = 0.0;
  for (int t = 0; t < cap; ++t) {
    const sim::StepResult sr = env.step(policy.act(env));
    reward = sr.reward;
    if (sr.done) break;
  }
  return reward;
}

DisturbanceResult disturbance_experiment(const rl::AgentParams& agent, const sim::DualArmEnv& env,
                                         int n_disturbances, int cycles, std::uint64_t seed,
                                         double force_cap, double torque_cap, int start, int end,
                                         int n_bins) {
  require(n_disturbances >= 1 && cycles >= 1, "disturbance_experiment: counts must be positive");
  require(force_cap >= 0 && torque_cap >= 0, "disturbance_experiment: caps must be non-negative");
  require(n_bins >= 1, "disturbance_experiment: need at least one bin");

  DisturbanceResult out;
  out.samples.reserve(static_cast<std::size_t>(n_disturbances) * cycles);
  for (int i = 0; i < n_disturbances; ++i) {
    std::mt19937_64 rng(derive_seed(seed, 4, i));
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> fmag(0.0, force_cap);
    std::uniform_real_distribution<double> tmag(-torque_cap, torque_cap);
    dyn::Wrench2D w;
    const double phi = angle(rng);
    w.force = fmag(rng) * unit_vec(phi);
    w.torque = tmag(rng);

    for (int c = 0; c < cycles; ++c) {
      const std::uint64_t ep_seed = derive_seed(seed, 5, static_cast<std::uint64_t>(i) * 1009 + c);

      sim::DualArmEnv ref = env;
      ref.clear_disturbance();
      std::vector<Vec2> ref_track;
      const int ref_len = run_deterministic(agent, ref, ep_seed, nullptr, &ref_track);

      sim::DualArmEnv dist = env;
      dist.set_disturbance({w, start, end});
      std::vector<Vec2> dist_track;
      bool success = false;
      const int dist_len = run_deterministic(agent, dist, ep_seed, &success, &dist_track);

      DisturbanceSample s;
      s.wrench = w;
      s.duration = dist_len;
      s.ref_duration = ref_len;
      s.success = success;
      const std::size_t common = std::min(ref_track.size(), dist_track.size());
      for (std::size_t t = 0; t < common; ++t)
        s.offset = std::max(s.offset, (dist_track[t] - ref_track[t]).norm());
      out.samples.push_back(s);
    }
  }

  double max_offset = 0.0;
  for (const DisturbanceSample& s : out.samples) max_offset = std::max(max_offset, s.offset);
  const double width = max_offset > 0 ? max_offset / n_bins : 1.0;
  out.bins.assign(n_bins, {});
  for (int b = 0; b < n_bins; ++b) out.bins[b].center = (b + 0.5) * width;
  for (const DisturbanceSample& s : out.samples) {
    int b = static_cast<int>(s.offset / width);
    b = std::clamp(b, 0, n_bins - 1);
    out.bins[b].mean_duration += s.duration;
    out.bins[b].count += 1;
  }
  for (DisturbanceBin& b : out.bins)
    if (b.count > 0) b.mean_duration /= b.count;
  return out;
}

std::vector<OffsetPoint> offset_experiment(const rl::AgentParams& agent,
                                           const sim::DualArmEnv& env,
                                           const std::vector<double>& magnitudes, int n_samples,
                                           std::uint64_t seed) {
  require(!magnitudes.empty(), "offset_experiment: no magnitudes");
  require(n_samples >= 1, "offset_experiment: n_samples must be positive");

  std::vector<OffsetPoint> points;
  points.reserve(magnitudes.size());
  for (std::size_t mi = 0; mi < magnitudes.size(); ++mi) {
    const double m = magnitudes[mi];
    require(m >= 0, "offset_experiment: negative magnitude");
    OffsetPoint p;
    p.magnitude = m;
    p.samples = n_samples;
    for (int s = 0; s < n_samples; ++s) {
      const std::uint64_t id = mi * 100003ULL + s;
      std::mt19937_64 rng(derive_seed(seed, 6, id));
      std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
      const double psi = angle(rng);

      sim::DualArmEnv run = env;
      run.set_peg_mount_offset({m * unit_vec(psi), 0.0});
      bool success = false;
      run_deterministic(agent, run, derive_seed(seed, 7, id), &success, nullptr);
      p.success += success ? 1.0 : 0.0;
    }
    p.success /= n_samples;
    points.push_back(p);
  }
  return points;
}

std::vector<TraceRecord> rollout_trace(const rl::AgentParams& agent, sim::DualArmEnv env,
                                       const std::optional<sim::DisturbanceSpec>& disturbance,
                                       std::uint64_t seed) {
  if (disturbance)
    env.set_disturbance(*disturbance);
  else
    env.clear_disturbance();

  std::mt19937_64 unused(0);
  sim::Observation obs = env.reset(derive_seed(seed, 8, 0));
  std::vector<TraceRecord> trace;
  while (true) {
    const Vec a = rl::select_action(agent, obs.state, obs.desired_goal, true, unused);
    const sim::StepResult sr = env.step(a);

    TraceRecord r;
    r.step = sr.info.step;
    r.q_left = env.arm_state(0).q;
    r.q_right = env.arm_state(1).q;
    r.q_des_left = sr.info.q_des_left;
    r.q_des_right = sr.info.q_des_right;
    const dyn::EePose el = env.ee_pose(0), er = env.ee_pose(1);
    r.ee_left = Vec3(el.pos.x(), el.pos.y(), el.theta);
    r.ee_right = Vec3(er.pos.x(), er.pos.y(), er.theta);
    r.action = a;
    r.reward = sr.reward;
    r.contact_normal = sr.info.contact_normal_sum;
    r.disturbance_active = sr.info.disturbance_active;
    trace.push_back(std::move(r));

    obs = sr.obs;
    if (sr.done) break;
  }
  return trace;
}

void write_trace_jsonl(const std::string& path, const std::vector<TraceRecord>& trace,
                       std::uint64_t config_hash,
                       const std::optional<sim::DisturbanceSpec>& disturbance) {
  require(!trace.empty(), "write_trace_jsonl: empty trace");
  require(trace.front().q_des_left.size() > 0,
          "write_trace_jsonl: q_des traces require the joint-position action space");

  using nlohmann::json;
  auto to_array = [](const Vec& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  auto to_array3 = [](const Vec3& v) { return std::vector<double>{v[0], v[1], v[2]}; };

  std::ofstream os = open_out(path);
  json meta;
  meta["meta"]["config_hash"] = hash_hex(config_hash);
  if (disturbance) {
    meta["meta"]["disturbance"] = {{"force", {disturbance->wrench.force.x(),
                                              disturbance->wrench.force.y()}},
                                   {"torque", disturbance->wrench.torque},
                                   {"window", {disturbance->start, disturbance->end}}};
  } else {
    meta["meta"]["disturbance"] = nullptr;
  }
  os << meta.dump() << "\n";

  for (const TraceRecord& r : trace) {
    json j;
    j["step"] = r.step;
    j["q_left"] = to_array(r.q_left);
    j["q_right"] = to_array(r.q_right);
    j["q_des_left"] = to_array(r.q_des_left);
    j["q_des_right"] = to_array(r.q_des_right);
    j["ee_left"] = to_array3(r.ee_left);
    j["ee_right"] = to_array3(r.ee_right);
    j["action"] = to_array(r.action);
    j["reward"] = r.reward;
    j["contact_normal"] = r.contact_normal;
    j["disturbance_active"] = r.disturbance_active;
    os << j.dump() << "\n";
  }
  if (!os) throw ConfigError("write_trace_jsonl: write failed for '" + path + "'");
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "spearman: size mismatch");
  require(x.size() >= 2, "spearman: need at least two points");
  const std::size_t n = x.size();

  auto ranks = [n](const std::vector<double>& v) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * (i + j) + 1.0;  // average rank for the tie group
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };

  const std::vector<double> rx = ranks(x), ry = ranks(y);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  require(sxx > 0 && syy > 0, "spearman: zero rank variance");
  return sxy / std::sqrt(sxx * syy);
}

void write_success_csv(const std::string& path, const std::vector<SuccessRow>& rows,
                       std::uint64_t config_hash) {
  std::ofstream os = open_out(path);
  os << "# config_hash=" << hash_hex(config_hash) << "\n";
  os << "action_space,clearance,epoch,seed,success_rate\n";
  for (const SuccessRow& r : rows)
    os << r.action_space << "," << fmt(r.clearance) << "," << r.epoch << "," << r.seed << ","
       << fmt(r.success) << "\n";
}

void write_disturbance_csv(const std::string& path, const DisturbanceResult& result,
                           std::uint64_t config_hash) {
  std::ofstream os = open_out(path);
  os << "# config_hash=" << hash_hex(config_hash) << "\n";
  os << "offset,duration,ref_duration,success,force_x,force_y,torque\n";
  for (const DisturbanceSample& s : result.samples)
    os << fmt(s.offset) << "," << s.duration << "," << s.ref_duration << "," << (s.success ? 1 : 0)
       << "," << fmt(s.wrench.force.x()) << "," << fmt(s.wrench.force.y()) << ","
       << fmt(s.wrench.torque) << "\n";
}

void write_disturbance_bins_csv(const std::string& path, const DisturbanceResult& result,
                                std::uint64_t config_hash) {
  std::ofstream os = open_out(path);
  os << "# config_hash=" << hash_hex(config_hash) << "\n";
  os << "offset_bin,mean_duration,count\n";
  for (const DisturbanceBin& b : result.bins)
    os << fmt(b.center) << "," << fmt(b.mean_duration) << "," << b.count << "\n";
}

void write_offsets_csv(const std::string& path, const std::vector<OffsetPoint>& points,
                       std::uint64_t config_hash) {
  std::ofstream os = open_out(path);
  os << "# config_hash=" << hash_hex(config_hash) << "\n";
  os << "offset,success_rate,samples\n";
  for (const OffsetPoint& p : points)
    os << fmt(p.magnitude) << "," << fmt(p.success) << "," << p.samples << "\n";
}

}  // namespace dualarm::harness
