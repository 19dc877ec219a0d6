#include "dualarm/trainer.hpp"

#include <cstring>
#include <fstream>

namespace dualarm::rl {
namespace {

constexpr char kMagic[8] = {'D', 'A', 'R', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ConfigError("checkpoint: truncated file");
  return v;
}

void put_vec(std::ostream& os, const Vec& v) {
  put<std::uint64_t>(os, static_cast<std::uint64_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()), sizeof(double) * v.size());
}

Vec get_vec(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  if (n > (1ULL << 32)) throw ConfigError("checkpoint: implausible vector size");
  Vec v(static_cast<Eigen::Index>(n));
  is.read(reinterpret_cast<char*>(v.data()), sizeof(double) * n);
  if (!is) throw ConfigError("checkpoint: truncated file");
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  if (n > (1ULL << 24)) throw ConfigError("checkpoint: implausible string size");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw ConfigError("checkpoint: truncated file");
  return s;
}

void put_layers(std::ostream& os, const std::vector<net::Layer>& layers) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(layers.size()));
  for (const net::Layer& l : layers) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(l.W.rows()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(l.W.cols()));
    os.write(reinterpret_cast<const char*>(l.W.data()), sizeof(double) * l.W.size());
    os.write(reinterpret_cast<const char*>(l.b.data()), sizeof(double) * l.b.size());
  }
}

std::vector<net::Layer> get_layers(std::istream& is) {
  const auto count = get<std::uint32_t>(is);
  if (count > 64) throw ConfigError("checkpoint: implausible layer count");
  std::vector<net::Layer> layers(count);
  for (net::Layer& l : layers) {
    const auto rows = get<std::uint32_t>(is);
    const auto cols = get<std::uint32_t>(is);
    if (rows > 65536 || cols > 65536) throw ConfigError("checkpoint: implausible layer shape");
    l.W.resize(rows, cols);
    l.b.resize(rows);
    is.read(reinterpret_cast<char*>(l.W.data()), sizeof(double) * l.W.size());
    is.read(reinterpret_cast<char*>(l.b.data()), sizeof(double) * l.b.size());
    if (!is) throw ConfigError("checkpoint: truncated file");
  }
  return layers;
}

void put_net(std::ostream& os, const net::MlpParams& p) { put_layers(os, p.layers); }
net::MlpParams get_net(std::istream& is) { return {get_layers(is)}; }

void put_adam(std::ostream& os, const net::AdamState& a) {
  put<std::int64_t>(os, a.step);
  put(os, a.beta1);
  put(os, a.beta2);
  put(os, a.eps);
  put_layers(os, a.m);
  put_layers(os, a.v);
}

net::AdamState get_adam(std::istream& is) {
  net::AdamState a;
  a.step = get<std::int64_t>(is);
  a.beta1 = get<double>(is);
  a.beta2 = get<double>(is);
  a.eps = get<double>(is);
  a.m = get_layers(is);
  a.v = get_layers(is);
  return a;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("checkpoint: cannot open '" + path + "' for writing");

  os.write(kMagic, sizeof(kMagic));
  put(os, kVersion);
  put(os, ckpt.structural_hash);
  put<std::int32_t>(os, ckpt.epoch);
  put(os, ckpt.episode_counter);
  put(os, ckpt.best_success);
  put_string(os, ckpt.trainer_rng);

  const AgentConfig& c = ckpt.agent.cfg;
  put<std::int32_t>(os, c.obs_dim);
  put<std::int32_t>(os, c.goal_dim);
  put<std::int32_t>(os, c.action_dim);
  put<std::int32_t>(os, c.hidden);
  put<std::int32_t>(os, c.q_layers);
  put<std::int32_t>(os, c.pi_layers);
  put(os, c.lr);
  put(os, c.gamma);
  put(os, c.polyak);
  put(os, c.init_alpha);
  put(os, c.target_entropy);
  put_vec(os, c.obs_scale);
  put_vec(os, c.goal_scale);

  put(os, ckpt.agent.log_alpha);
  put(os, ckpt.agent.alpha_opt.m);
  put(os, ckpt.agent.alpha_opt.v);
  put<std::int64_t>(os, ckpt.agent.alpha_opt.step);
  put(os, ckpt.agent.updates);
  put(os, ckpt.agent.numeric_warnings);

  put_net(os, ckpt.agent.policy);
  put_net(os, ckpt.agent.q1);
  put_net(os, ckpt.agent.q2);
  put_net(os, ckpt.agent.q1_target);
  put_net(os, ckpt.agent.q2_target);
  put_adam(os, ckpt.agent.policy_opt);
  put_adam(os, ckpt.agent.q1_opt);
  put_adam(os, ckpt.agent.q2_opt);

  os.flush();
  if (!os) throw ConfigError("checkpoint: write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path, std::uint64_t expected_hash) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("checkpoint: cannot open '" + path + "'");

  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ConfigError("checkpoint: '" + path + "' is not a checkpoint file");
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) throw ConfigError("checkpoint: unsupported version");

  Checkpoint ckpt;
  ckpt.structural_hash = get<std::uint64_t>(is);
  if (expected_hash != 0 && ckpt.structural_hash != expected_hash)
    throw ConfigError(
        "checkpoint: structural hash mismatch (checkpoint was produced under a different network/"
        "action-space/arm configuration)");
  ckpt.epoch = get<std::int32_t>(is);
  ckpt.episode_counter = get<std::uint64_t>(is);
  ckpt.best_success = get<double>(is);
  ckpt.trainer_rng = get_string(is);

  AgentConfig c;
  c.obs_dim = get<std::int32_t>(is);
  c.goal_dim = get<std::int32_t>(is);
  c.action_dim = get<std::int32_t>(is);
  c.hidden = get<std::int32_t>(is);
  c.q_layers = get<std::int32_t>(is);
  c.pi_layers = get<std::int32_t>(is);
  c.lr = get<double>(is);
  c.gamma = get<double>(is);
  c.polyak = get<double>(is);
  c.init_alpha = get<double>(is);
  c.target_entropy = get<double>(is);
  c.obs_scale = get_vec(is);
  c.goal_scale = get_vec(is);
  ckpt.agent.cfg = std::move(c);

  ckpt.agent.log_alpha = get<double>(is);
  ckpt.agent.alpha_opt.m = get<double>(is);
  ckpt.agent.alpha_opt.v = get<double>(is);
  ckpt.agent.alpha_opt.step = get<std::int64_t>(is);
  ckpt.agent.updates = get<std::uint64_t>(is);
  ckpt.agent.numeric_warnings = get<std::uint64_t>(is);

  ckpt.agent.policy = get_net(is);
  ckpt.agent.q1 = get_net(is);
  ckpt.agent.q2 = get_net(is);
  ckpt.agent.q1_target = get_net(is);
  ckpt.agent.q2_target = get_net(is);
  ckpt.agent.policy_opt = get_adam(is);
  ckpt.agent.q1_opt = get_adam(is);
  ckpt.agent.q2_opt = get_adam(is);
  return ckpt;
}

}  // namespace dualarm::rl
