#include "dualarm/sac.hpp"

#include <algorithm>
#include <cmath>

namespace dualarm::rl {
namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;

inline double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// log(1 - tanh(u)^2), stable for large |u|.
inline double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::log(2.0) - u - softplus(-2.0 * u));
}

Mat standard_normal(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat n(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) n(r, c) = g(rng);
  return n;
}

struct PolicyEval {
  Mat mean, log_std_raw, log_std, pre_tanh, action;  // d x B
  Vec log_prob;                                      // B
  net::BatchCache cache;
};

PolicyEval eval_policy(const net::MlpParams& policy, const Mat& X, const Mat& noise) {
  const int d = static_cast<int>(noise.rows());
  PolicyEval e;
  const Mat out = net::mlp_forward(policy, X, &e.cache);
  require(out.rows() == 2 * d, "eval_policy: policy head width mismatch");
  e.mean = out.topRows(d);
  e.log_std_raw = out.bottomRows(d);
  e.log_std = e.log_std_raw.cwiseMax(net::kLogStdMin).cwiseMin(net::kLogStdMax);
  e.pre_tanh = e.mean + e.log_std.array().exp().matrix().cwiseProduct(noise);
  e.action = e.pre_tanh.array().tanh().matrix();

  const int B = static_cast<int>(X.cols());
  e.log_prob.resize(B);
  for (int s = 0; s < B; ++s) {
    double lp = 0.0;
    for (int i = 0; i < d; ++i) {
      lp += -e.log_std(i, s) - kHalfLog2Pi - 0.5 * noise(i, s) * noise(i, s);
      lp -= log_one_minus_tanh_sq(e.pre_tanh(i, s));
    }
    e.log_prob[s] = lp;
  }
  return e;
}

Mat critic_input(const Mat& X, const Mat& actions) {
  Mat in(X.rows() + actions.rows(), X.cols());
  in.topRows(X.rows()) = X;
  in.bottomRows(actions.rows()) = actions;
  return in;
}

bool finite_grads(const net::MlpParams& g) {
  for (const net::Layer& l : g.layers)
    if (!all_finite(l.W) || !all_finite(l.b)) return false;
  return true;
}

void polyak_update(net::MlpParams& target, const net::MlpParams& online, double tau) {
  for (std::size_t l = 0; l < target.layers.size(); ++l) {
    target.layers[l].W = (1.0 - tau) * target.layers[l].W + tau * online.layers[l].W;
    target.layers[l].b = (1.0 - tau) * target.layers[l].b + tau * online.layers[l].b;
  }
}

}  // namespace

void AgentConfig::validate() const {
  require(obs_dim > 0 && goal_dim > 0 && action_dim > 0, "agent: dimensions must be positive");
  require(hidden > 0, "agent: hidden width must be positive");
  require(q_layers >= 2 && pi_layers >= 2, "agent: need at least 2 linear layers");
  require(lr > 0, "agent: lr must be positive");
  require(gamma > 0 && gamma < 1, "agent: gamma must be in (0,1)");
  require(polyak > 0 && polyak <= 1, "agent: polyak factor out of range");
  require(init_alpha > 0, "agent: init_alpha must be positive");
  require(target_min <= target_max, "agent: target clamp range is inverted");
  require(std::isfinite(reward_bias), "agent: reward_bias must be finite");
  require(action_l2 >= 0, "agent: action_l2 must be non-negative");
  require(obs_scale.size() == 0 || obs_scale.size() == obs_dim, "agent: obs_scale size mismatch");
  require(goal_scale.size() == 0 || goal_scale.size() == goal_dim,
          "agent: goal_scale size mismatch");
}

AgentParams make_agent(const AgentConfig& cfg, std::mt19937_64& rng) {
  AgentConfig c = cfg;
  c.validate();
  if (c.obs_scale.size() == 0) c.obs_scale = Vec::Ones(c.obs_dim);
  if (c.goal_scale.size() == 0) c.goal_scale = Vec::Ones(c.goal_dim);
  if (c.target_entropy == 0.0) c.target_entropy = -static_cast<double>(c.action_dim);

  auto widths = [&](int layers, int in, int out) {
    std::vector<int> d{in};
    for (int l = 0; l < layers - 1; ++l) d.push_back(c.hidden);
    d.push_back(out);
    return d;
  };
  AgentParams a;
  a.policy = net::make_mlp(widths(c.pi_layers, c.input_dim(), 2 * c.action_dim), rng, 0.01);
  a.q1 = net::make_mlp(widths(c.q_layers, c.input_dim() + c.action_dim, 1), rng);
  a.q2 = net::make_mlp(widths(c.q_layers, c.input_dim() + c.action_dim, 1), rng);
  a.q1_target = a.q1;
  a.q2_target = a.q2;
  a.policy_opt = net::AdamState::like(a.policy);
  a.q1_opt = net::AdamState::like(a.q1);
  a.q2_opt = net::AdamState::like(a.q2);
  a.log_alpha = std::log(c.init_alpha);
  a.cfg = std::move(c);
  return a;
}

Vec assemble_input(const AgentConfig& cfg, const Vec& obs, const Vec& goal) {
  require(obs.size() == cfg.obs_dim && goal.size() == cfg.goal_dim,
          "assemble_input: size mismatch");
  Vec x(cfg.input_dim());
  x.head(cfg.obs_dim) = cfg.obs_scale.cwiseProduct(obs);
  x.tail(cfg.goal_dim) = cfg.goal_scale.cwiseProduct(goal);
  return x;
}

Mat assemble_input(const AgentConfig& cfg, const Mat& obs, const Mat& goal) {
  require(obs.rows() == cfg.obs_dim && goal.rows() == cfg.goal_dim && obs.cols() == goal.cols(),
          "assemble_input: shape mismatch");
  Mat x(cfg.input_dim(), obs.cols());
  x.topRows(cfg.obs_dim) = obs.array().colwise() * cfg.obs_scale.array();
  x.bottomRows(cfg.goal_dim) = goal.array().colwise() * cfg.goal_scale.array();
  return x;
}

Vec select_action(const AgentParams& agent, const Vec& obs, const Vec& goal, bool deterministic,
                  std::mt19937_64& rng) {
  const Vec x = assemble_input(agent.cfg, obs, goal);
  const Vec out = net::mlp_forward(agent.policy, x);
  const int d = agent.cfg.action_dim;
  const Vec mean = out.head(d);
  if (deterministic) return mean.array().tanh().matrix();

  const Vec log_std = out.tail(d);
  std::normal_distribution<double> g(0.0, 1.0);
  Vec noise(d);
  for (int i = 0; i < d; ++i) noise[i] = g(rng);
  return net::tanh_gaussian_sample(mean, log_std, noise).action;
}

double policy_objective(const AgentParams& agent, const net::MlpParams& policy, const Batch& batch,
                        const Mat& noise, net::MlpParams* grad, double* mean_log_prob) {
  const AgentConfig& cfg = agent.cfg;
  const int B = batch.size();
  const int d = cfg.action_dim;
  require(noise.rows() == d && noise.cols() == B, "policy_objective: noise shape mismatch");

  const Mat X = assemble_input(cfg, batch.obs, batch.goal);
  PolicyEval pi = eval_policy(policy, X, noise);
  if (mean_log_prob) *mean_log_prob = pi.log_prob.mean();

  net::BatchCache c1, c2;
  const Mat qin = critic_input(X, pi.action);
  const Mat q1v = net::mlp_forward(agent.q1, qin, &c1);
  const Mat q2v = net::mlp_forward(agent.q2, qin, &c2);

  const double alpha = agent.alpha();
  double loss = 0.0;
  for (int s = 0; s < B; ++s)
    loss += alpha * pi.log_prob[s] - std::min(q1v(0, s), q2v(0, s));
  loss /= B;
  loss += cfg.action_l2 * pi.action.squaredNorm() / B;
  if (!grad) return loss;

  // d loss / d action through the minimum of the online critics.
  Mat go1(1, B), go2(1, B);
  for (int s = 0; s < B; ++s) {
    const bool first = q1v(0, s) <= q2v(0, s);
    go1(0, s) = first ? -1.0 / B : 0.0;
    go2(0, s) = first ? 0.0 : -1.0 / B;
  }
  Mat ig1, ig2;
  net::mlp_backward(agent.q1, c1, go1, &ig1);  // critic parameter grads discarded
  net::mlp_backward(agent.q2, c2, go2, &ig2);
  const Mat dA =
      ig1.bottomRows(d) + ig2.bottomRows(d) + (2.0 * cfg.action_l2 / B) * pi.action;

  // Through the tanh head: u = mean + exp(log_std) * noise,
  // d log pi / du = 2 tanh(u), d log pi / d log_std = -1 (+ chain through u).
  const Mat one_minus_a2 = (1.0 - pi.action.array().square()).matrix();
  const Mat dU =
      dA.cwiseProduct(one_minus_a2) + (alpha / B) * 2.0 * pi.action;
  const Mat sigma_noise = pi.log_std.array().exp().matrix().cwiseProduct(noise);
  Mat dLogStd = dU.cwiseProduct(sigma_noise);
  dLogStd.array() -= alpha / B;
  // Clamp gate: no gradient where log_std saturated.
  const Mat gate = ((pi.log_std_raw.array() > net::kLogStdMin) &&
                    (pi.log_std_raw.array() < net::kLogStdMax))
                       .cast<double>()
                       .matrix();
  dLogStd = dLogStd.cwiseProduct(gate);

  Mat gout(2 * d, B);
  gout.topRows(d) = dU;
  gout.bottomRows(d) = dLogStd;
  *grad = net::mlp_backward(policy, pi.cache, gout);
  return loss;
}

LossReport sac_update(AgentParams& agent, const Batch& batch, std::mt19937_64& rng,
                      UpdateTrace* trace) {
  const AgentConfig& cfg = agent.cfg;
  const int B = batch.size();
  const int d = cfg.action_dim;
  require(B >= 1, "sac_update: empty batch");
  require(batch.obs.rows() == cfg.obs_dim && batch.goal.rows() == cfg.goal_dim &&
              batch.action.rows() == d,
          "sac_update: batch shape mismatch");

  LossReport rep;
  rep.alpha = agent.alpha();

  // ---- Bellman target from the TARGET critics at the next state.
  const Mat Xn = assemble_input(cfg, batch.next_obs, batch.goal);
  const Mat next_noise = standard_normal(d, B, rng);
  const PolicyEval pin = eval_policy(agent.policy, Xn, next_noise);
  const Mat qin_n = critic_input(Xn, pin.action);
  const Mat q1t = net::mlp_forward(agent.q1_target, qin_n);
  const Mat q2t = net::mlp_forward(agent.q2_target, qin_n);

  Vec y(B);
  for (int s = 0; s < B; ++s) {
    const double qmin = std::min(q1t(0, s), q2t(0, s));
    y[s] = batch.reward[s] + cfg.reward_bias +
           cfg.gamma * (1.0 - batch.done[s]) * (qmin - rep.alpha * pin.log_prob[s]);
    y[s] = std::clamp(y[s], cfg.target_min, cfg.target_max);
  }
  if (trace) {
    trace->q1_target_vals = q1t.row(0).transpose();
    trace->q2_target_vals = q2t.row(0).transpose();
    trace->next_log_prob = pin.log_prob;
    trace->targets = y;
  }

  // ---- Critic losses and gradients.
  const Mat X = assemble_input(cfg, batch.obs, batch.goal);
  const Mat qin = critic_input(X, batch.action);
  net::BatchCache c1, c2;
  const Mat q1v = net::mlp_forward(agent.q1, qin, &c1);
  const Mat q2v = net::mlp_forward(agent.q2, qin, &c2);
  const Mat e1 = q1v.row(0).transpose() - y;
  const Mat e2 = q2v.row(0).transpose() - y;
  rep.q1_loss = e1.squaredNorm() / B;
  rep.q2_loss = e2.squaredNorm() / B;
  const net::MlpParams g1 = net::mlp_backward(agent.q1, c1, (2.0 / B) * e1.transpose());
  const net::MlpParams g2 = net::mlp_backward(agent.q2, c2, (2.0 / B) * e2.transpose());

  double qabs_max = 0.0;
  for (int s = 0; s < B; ++s) {
    rep.mean_q += std::min(q1v(0, s), q2v(0, s));
    qabs_max = std::max({qabs_max, std::abs(q1v(0, s)), std::abs(q2v(0, s))});
  }
  rep.mean_q /= B;
  // Rewards in {0,1} with discounting bound Q by 1/(1-gamma); far beyond that
  // is a numeric red flag worth counting, though not fatal.
  if (qabs_max > 10.0 / (1.0 - cfg.gamma)) agent.numeric_warnings += 1;

  // ---- Policy loss and gradient (fresh reparameterization noise); the same
  // samples' log-probs drive the temperature step.
  const Mat noise = standard_normal(d, B, rng);
  net::MlpParams gpi;
  rep.policy_loss = policy_objective(agent, agent.policy, batch, noise, &gpi, &rep.mean_log_prob);
  const double alpha_grad = -(rep.mean_log_prob + cfg.target_entropy);
  rep.alpha_loss = -agent.log_alpha * (rep.mean_log_prob + cfg.target_entropy);

  // ---- Atomic guard: skip everything on any non-finite quantity.
  const bool ok = std::isfinite(rep.q1_loss) && std::isfinite(rep.q2_loss) &&
                  std::isfinite(rep.policy_loss) && std::isfinite(alpha_grad) &&
                  finite_grads(g1) && finite_grads(g2) && finite_grads(gpi);
  if (!ok) {
    agent.numeric_warnings += 1;
    rep.skipped = true;
    return rep;
  }

  net::adam_step(agent.q1_opt, agent.q1, g1, cfg.lr);
  net::adam_step(agent.q2_opt, agent.q2, g2, cfg.lr);
  net::adam_step(agent.policy_opt, agent.policy, gpi, cfg.lr);
  net::adam_step(agent.alpha_opt, agent.log_alpha, alpha_grad, cfg.lr);

  polyak_update(agent.q1_target, agent.q1, cfg.polyak);
  polyak_update(agent.q2_target, agent.q2, cfg.polyak);
  agent.updates += 1;
  return rep;
}

}  // namespace dualarm::rl
