#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dualarm/net.hpp"
#include "dualarm/sac.hpp"

#include <cmath>
#include <random>

using namespace dualarm;

namespace {

// Straight-line reimplementation of the forward pass with scalar loops; kept
// deliberately free of Eigen expressions so it can disagree with the library.
Vec forward_by_hand(const net::MlpParams& p, const Vec& x) {
  std::vector<double> act(x.data(), x.data() + x.size());
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const Mat& W = p.layers[l].W;
    const Vec& b = p.layers[l].b;
    std::vector<double> next(static_cast<std::size_t>(W.rows()), 0.0);
    for (int r = 0; r < W.rows(); ++r) {
      double z = b[r];
      for (int c = 0; c < W.cols(); ++c) z += W(r, c) * act[static_cast<std::size_t>(c)];
      if (l + 1 < p.layers.size() && z < 0) z = 0;  // ReLU on hidden layers
      next[static_cast<std::size_t>(r)] = z;
    }
    act = std::move(next);
  }
  Vec out(static_cast<int>(act.size()));
  for (int i = 0; i < out.size(); ++i) out[i] = act[static_cast<std::size_t>(i)];
  return out;
}

double scalar_loss(const net::MlpParams& p, const Vec& x, const Vec& target) {
  const Vec y = net::mlp_forward(p, x);
  return 0.5 * (y - target).squaredNorm();
}

rl::Batch tiny_batch(int obs_dim, int goal_dim, int act_dim, int B, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  rl::Batch b;
  b.obs = Mat::NullaryExpr(obs_dim, B, [&] { return n(rng); });
  b.next_obs = Mat::NullaryExpr(obs_dim, B, [&] { return n(rng); });
  b.action = Mat::NullaryExpr(act_dim, B, [&] { return 0.7 * std::tanh(n(rng)); });
  b.goal = Mat::NullaryExpr(goal_dim, B, [&] { return n(rng); });
  b.next_achieved = Mat::NullaryExpr(goal_dim, B, [&] { return n(rng); });
  b.reward = Vec::NullaryExpr(B, [&] { return n(rng) > 1.0 ? 1.0 : 0.0; });
  b.done = b.reward;
  b.relabeled.assign(static_cast<std::size_t>(B), 0);
  b.episode_id.assign(static_cast<std::size_t>(B), 0);
  b.step_index.assign(static_cast<std::size_t>(B), 0);
  b.future_index.assign(static_cast<std::size_t>(B), -1);
  return b;
}

}  // namespace

TEST_CASE("mlp forward agrees with a scalar-loop evaluation") {
  std::mt19937_64 rng(3);
  const net::MlpParams p = net::make_mlp({5, 16, 16, 4}, rng);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    Vec x = Vec::NullaryExpr(5, [&] { return n(rng); });
    const Vec lib = net::mlp_forward(p, x);
    const Vec ref = forward_by_hand(p, x);
    CHECK((lib - ref).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("batch forward matches column-wise single forward") {
  std::mt19937_64 rng(5);
  const net::MlpParams p = net::make_mlp({4, 12, 3}, rng);
  std::normal_distribution<double> n(0.0, 1.0);
  Mat X = Mat::NullaryExpr(4, 7, [&] { return n(rng); });
  const Mat Y = net::mlp_forward(p, X);
  REQUIRE(Y.cols() == 7);
  for (int c = 0; c < 7; ++c)
    CHECK((Y.col(c) - net::mlp_forward(p, Vec(X.col(c)))).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("mlp gradients match finite differences to 1e-4") {
  std::mt19937_64 rng(7);
  net::MlpParams p = net::make_mlp({4, 10, 8, 2}, rng);
  std::normal_distribution<double> n(0.0, 1.0);
  const Vec x = Vec::NullaryExpr(4, [&] { return n(rng); });
  const Vec target = Vec::NullaryExpr(2, [&] { return n(rng); });

  net::ForwardCache cache;
  const Vec y = net::mlp_forward(p, x, &cache);
  Vec input_grad;
  const net::MlpParams grads = net::mlp_backward(p, cache, Vec(y - target), &input_grad);

  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    for (int r = 0; r < p.layers[l].W.rows(); ++r) {
      for (int c = 0; c < p.layers[l].W.cols(); ++c) {
        const double save = p.layers[l].W(r, c);
        p.layers[l].W(r, c) = save + h;
        const double fp = scalar_loss(p, x, target);
        p.layers[l].W(r, c) = save - h;
        const double fm = scalar_loss(p, x, target);
        p.layers[l].W(r, c) = save;
        worst = std::max(worst, std::abs((fp - fm) / (2 * h) - grads.layers[l].W(r, c)));
      }
      const double save = p.layers[l].b[r];
      p.layers[l].b[r] = save + h;
      const double fp = scalar_loss(p, x, target);
      p.layers[l].b[r] = save - h;
      const double fm = scalar_loss(p, x, target);
      p.layers[l].b[r] = save;
      worst = std::max(worst, std::abs((fp - fm) / (2 * h) - grads.layers[l].b[r]));
    }
  }
  CHECK(worst < 1e-4);

  // Input gradient too.
  double worst_in = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fd = (scalar_loss(p, xp, target) - scalar_loss(p, xm, target)) / (2 * h);
    worst_in = std::max(worst_in, std::abs(fd - input_grad[i]));
  }
  CHECK(worst_in < 1e-4);
}

TEST_CASE("adam decreases a quadratic and rejects non-finite gradients") {
  std::mt19937_64 rng(11);
  net::MlpParams p = net::make_mlp({3, 8, 1}, rng);
  net::AdamState opt = net::AdamState::like(p);
  std::normal_distribution<double> n(0.0, 1.0);
  const Vec x = Vec::NullaryExpr(3, [&] { return n(rng); });
  const Vec target = Vec::Constant(1, 0.7);

  double before = scalar_loss(p, x, target);
  for (int it = 0; it < 200; ++it) {
    net::ForwardCache cache;
    const Vec y = net::mlp_forward(p, x, &cache);
    const net::MlpParams g = net::mlp_backward(p, cache, Vec(y - target));
    net::adam_step(opt, p, g, 1e-2);
  }
  CHECK(scalar_loss(p, x, target) < 0.01 * before);

  net::MlpParams bad = net::MlpParams::zeros_like(p);
  bad.layers[0].W(0, 0) = std::numeric_limits<double>::quiet_NaN();
  const Mat w_before = p.layers[0].W;
  CHECK_THROWS_AS(net::adam_step(opt, p, bad, 1e-2), NumericError);
  CHECK((p.layers[0].W - w_before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tanh gaussian log density integrates to one over the action space") {
  // 1-D quadrature over a in (-1, 1) via the pre-tanh substitution.
  const Vec mean = Vec::Constant(1, 0.3);
  const Vec log_std = Vec::Constant(1, -0.5);
  const int N = 4000;
  double integral = 0.0;
  for (int i = 0; i < N; ++i) {
    const double a = -1.0 + 2.0 * (i + 0.5) / N;
    const double u = std::atanh(a);
    const double lp = net::tanh_gaussian_log_prob(mean, log_std, Vec::Constant(1, u));
    integral += std::exp(lp) * (2.0 / N);
  }
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("sampled actions report the same log prob as the density function") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    Vec mean = Vec::NullaryExpr(4, [&] { return n(rng); });
    Vec log_std = Vec::NullaryExpr(4, [&] { return 0.5 * n(rng); });
    Vec noise = Vec::NullaryExpr(4, [&] { return n(rng); });
    const net::SquashedSample s = net::tanh_gaussian_sample(mean, log_std, noise);
    CHECK(s.action.cwiseAbs().maxCoeff() < 1.0);
    CHECK(s.log_prob ==
          doctest::Approx(net::tanh_gaussian_log_prob(mean, log_std, s.pre_tanh)).epsilon(1e-10));
  }
}

TEST_CASE("log std clamping keeps saturated samples finite") {
  const Vec mean = Vec::Constant(2, 50.0);
  const Vec log_std = Vec::Constant(2, 40.0);  // clamped to kLogStdMax
  const net::SquashedSample s =
      net::tanh_gaussian_sample(mean, log_std, Vec::Constant(2, 3.0));
  CHECK(std::isfinite(s.log_prob));
  CHECK(s.action.allFinite());
  CHECK(s.action.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("policy objective gradient matches finite differences to 1e-3") {
  std::mt19937_64 rng(17);
  rl::AgentConfig cfg;
  cfg.obs_dim = 6;
  cfg.goal_dim = 2;
  cfg.action_dim = 3;
  cfg.hidden = 12;
  cfg.q_layers = 3;
  cfg.pi_layers = 3;
  rl::AgentParams agent = rl::make_agent(cfg, rng);

  const rl::Batch batch = tiny_batch(6, 2, 3, 8, rng);
  std::normal_distribution<double> n(0.0, 1.0);
  const Mat noise = Mat::NullaryExpr(3, 8, [&] { return n(rng); });

  net::MlpParams grad;
  (void)rl::policy_objective(agent, agent.policy, batch, noise, &grad);

  const double h = 1e-5;
  net::MlpParams p = agent.policy;
  double worst = 0.0;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    // Probing every weight is slow; stride over a representative subset.
    for (int r = 0; r < p.layers[l].W.rows(); r += 2) {
      for (int c = 0; c < p.layers[l].W.cols(); c += 3) {
        const double save = p.layers[l].W(r, c);
        p.layers[l].W(r, c) = save + h;
        const double fp = rl::policy_objective(agent, p, batch, noise);
        p.layers[l].W(r, c) = save - h;
        const double fm = rl::policy_objective(agent, p, batch, noise);
        p.layers[l].W(r, c) = save;
        worst = std::max(worst, std::abs((fp - fm) / (2 * h) - grad.layers[l].W(r, c)));
      }
      const double save = p.layers[l].b[r];
      p.layers[l].b[r] = save + h;
      const double fp = rl::policy_objective(agent, p, batch, noise);
      p.layers[l].b[r] = save - h;
      const double fm = rl::policy_objective(agent, p, batch, noise);
      p.layers[l].b[r] = save;
      worst = std::max(worst, std::abs((fp - fm) / (2 * h) - grad.layers[l].b[r]));
    }
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("sac update regresses critics toward the reported targets") {
  std::mt19937_64 rng(19);
  rl::AgentConfig cfg;
  cfg.obs_dim = 5;
  cfg.goal_dim = 2;
  cfg.action_dim = 2;
  cfg.hidden = 16;
  cfg.lr = 1e-3;
  rl::AgentParams agent = rl::make_agent(cfg, rng);
  const rl::Batch batch = tiny_batch(5, 2, 2, 16, rng);

  rl::UpdateTrace trace;
  const rl::LossReport r = rl::sac_update(agent, batch, rng, &trace);
  CHECK_FALSE(r.skipped);
  CHECK(std::isfinite(r.q1_loss));
  CHECK(trace.targets.size() == 16);
  // Bellman target definition: y = r + gamma (1 - done) (min Q' - alpha log pi').
  for (int i = 0; i < 16; ++i) {
    const double minq = std::min(trace.q1_target_vals[i], trace.q2_target_vals[i]);
    const double expect =
        batch.reward[i] +
        cfg.gamma * (1.0 - batch.done[i]) * (minq - r.alpha * trace.next_log_prob[i]);
    CHECK(trace.targets[i] == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("polyak update moves targets by the configured fraction") {
  std::mt19937_64 rng(23);
  rl::AgentConfig cfg;
  cfg.obs_dim = 4;
  cfg.goal_dim = 2;
  cfg.action_dim = 2;
  cfg.hidden = 8;
  cfg.polyak = 0.25;
  cfg.lr = 1e-12;  // online nets barely move, so the target motion is ~pure Polyak
  rl::AgentParams agent = rl::make_agent(cfg, rng);
  const Mat online = agent.q1.layers[0].W;
  Mat target = agent.q1_target.layers[0].W;
  REQUIRE((online - target).cwiseAbs().maxCoeff() == 0.0);  // targets start as copies

  agent.q1_target.layers[0].W.setZero();  // separate them artificially
  target = agent.q1_target.layers[0].W;
  const rl::Batch batch = tiny_batch(4, 2, 2, 8, rng);
  rl::sac_update(agent, batch, rng);
  const Mat expect = 0.25 * online + 0.75 * target;
  CHECK((agent.q1_target.layers[0].W - expect).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("temperature moves toward the entropy target") {
  std::mt19937_64 rng(29);
  rl::AgentConfig cfg;
  cfg.obs_dim = 4;
  cfg.goal_dim = 2;
  cfg.action_dim = 2;
  cfg.hidden = 8;
  cfg.lr = 1e-2;
  cfg.target_entropy = -2.0;
  rl::AgentParams agent = rl::make_agent(cfg, rng);
  const double alpha0 = agent.alpha();
  const rl::Batch batch = tiny_batch(4, 2, 2, 32, rng);
  rl::LossReport last;
  for (int i = 0; i < 50; ++i) last = rl::sac_update(agent, batch, rng);
  // alpha chases the entropy target: surplus entropy (mean log pi below the
  // negated target) drives it down, a too-deterministic policy drives it up.
  if (last.mean_log_prob + cfg.target_entropy < 0.0)
    CHECK(agent.alpha() < alpha0);
  else
    CHECK(agent.alpha() > alpha0);
}

TEST_CASE("deterministic action selection is reproducible and respects scaling") {
  std::mt19937_64 rng(31);
  rl::AgentConfig cfg;
  cfg.obs_dim = 3;
  cfg.goal_dim = 2;
  cfg.action_dim = 2;
  cfg.hidden = 8;
  cfg.obs_scale = Vec::Constant(3, 0.5);
  cfg.goal_scale = Vec::Constant(2, 10.0);
  rl::AgentParams agent = rl::make_agent(cfg, rng);
  const Vec obs = (Vec(3) << 0.2, -1.0, 0.4).finished();
  const Vec goal = (Vec(2) << 0.01, -0.02).finished();

  std::mt19937_64 r1(1), r2(99);
  const Vec a1 = rl::select_action(agent, obs, goal, true, r1);
  const Vec a2 = rl::select_action(agent, obs, goal, true, r2);
  CHECK((a1 - a2).cwiseAbs().maxCoeff() == 0.0);  // rng unused when deterministic

  const Vec input = rl::assemble_input(cfg, obs, goal);
  CHECK(input.head(3).isApprox(0.5 * obs));
  CHECK(input.tail(2).isApprox(10.0 * goal));
}
