#include "dualarm/run.hpp"

#include "dualarm/experiments.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace dualarm::cli {
namespace {

namespace fs = std::filesystem;

ExperimentConfig load_config(const CliOptions& o) {
  ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig::defaults(o.long_run)
                                               : parse_config(o.config_path, o.long_run);
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  cfg.validate();
  return cfg;
}

std::string ckpt_path(const ExperimentConfig& cfg, std::uint64_t seed, const char* tag) {
  return cfg.out_dir + "/checkpoint_seed" + std::to_string(seed) + "_" + tag + ".bin";
}

void prepare_out_dir(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  write_config_echo(cfg.out_dir + "/config_echo.txt", cfg);
}

int train(const ExperimentConfig& cfg) {
  prepare_out_dir(cfg);
  const std::uint64_t hash = cfg.structural_hash();
  std::vector<harness::SuccessRow> rows;

  for (const std::uint64_t seed : cfg.seeds) {
    sim::DualArmEnv env(cfg.env());
    std::mt19937_64 init_rng(derive_seed(seed, 0, 1));
    rl::AgentParams agent = rl::make_agent(cfg.agent_config(), init_rng);
    rl::Trainer trainer(std::move(agent), std::move(env), cfg.trainer_config(), seed);

    double best = -1.0;
    auto save = [&](const char* tag) {
      rl::Checkpoint ck;
      ck.structural_hash = hash;
      ck.agent = trainer.agent();
      ck.epoch = trainer.epoch();
      ck.episode_counter = trainer.episode_counter();
      ck.trainer_rng = trainer.rng_state();
      ck.best_success = best;
      rl::save_checkpoint(ckpt_path(cfg, seed, tag), ck);
    };

    std::cout << "train seed " << seed << " (" << cfg.action_space << ", clearance "
              << cfg.clearance << ", " << cfg.epochs << " epochs)\n";
    int streak = 0;
    for (int e = 0; e < cfg.epochs; ++e) {
      const rl::EpochReport rep = trainer.train_epoch();
      if (rep.eval_success >= 0.0) {
        rows.push_back({cfg.action_space, cfg.clearance, rep.epoch, seed, rep.eval_success});
        std::cout << "  epoch " << rep.epoch << "  success " << rep.eval_success << "  buffer "
                  << rep.buffer_size << std::endl;
        if (rep.eval_success > best) {
          best = rep.eval_success;
          save("best");
        }
        streak = rep.eval_success >= cfg.stop_success ? streak + 1 : 0;
        if (streak >= cfg.patience) {
          std::cout << "  stopping early at epoch " << rep.epoch << std::endl;
          break;
        }
      }
      if (rep.epoch % 50 == 0) save("latest");
    }
    save("final");
    std::cout << "  done: " << trainer.epoch() << " epochs, best success "
              << (best < 0 ? 0.0 : best) << std::endl;
  }

  harness::write_success_csv(cfg.out_dir + "/success_rates.csv", rows, hash);
  return 0;
}

int eval_cmd(const ExperimentConfig& cfg, const rl::Checkpoint& ck) {
  const sim::DualArmEnv env(cfg.env());
  std::vector<harness::SuccessRow> rows;
  for (const std::uint64_t seed : cfg.seeds) {
    const double rate = harness::success_rate(ck.agent, env, cfg.eval_cycles, seed);
    rows.push_back({cfg.action_space, cfg.clearance, ck.epoch, seed, rate});
    std::cout << "eval seed " << seed << "  success " << rate << "\n";
  }
  harness::write_success_csv(cfg.out_dir + "/eval_success.csv", rows, cfg.structural_hash());
  return 0;
}

int disturb_cmd(const ExperimentConfig& cfg, const rl::Checkpoint& ck) {
  const sim::DualArmEnv env(cfg.env());
  const harness::DisturbanceResult res = harness::disturbance_experiment(
      ck.agent, env, cfg.disturbances, cfg.disturbance_cycles, cfg.seeds[0], cfg.force_cap,
      cfg.torque_cap, cfg.disturb_start, cfg.disturb_end, cfg.disturbance_bins);
  const std::uint64_t hash = cfg.structural_hash();
  harness::write_disturbance_csv(cfg.out_dir + "/disturbance_samples.csv", res, hash);
  harness::write_disturbance_bins_csv(cfg.out_dir + "/disturbance_bins.csv", res, hash);

  std::vector<double> centers, durations;
  for (const harness::DisturbanceBin& b : res.bins)
    if (b.count > 0) {
      centers.push_back(b.center);
      durations.push_back(b.mean_duration);
    }
  std::cout << "disturbance samples " << res.samples.size() << ", occupied bins "
            << centers.size();
  if (centers.size() >= 2) std::cout << ", offset/duration spearman " << harness::spearman(centers, durations);
  std::cout << "\n";
  return 0;
}

int offset_cmd(const ExperimentConfig& cfg, const rl::Checkpoint& ck) {
  const sim::DualArmEnv env(cfg.env());
  std::vector<double> mags(cfg.offset_magnitudes.data(),
                           cfg.offset_magnitudes.data() + cfg.offset_magnitudes.size());
  const std::vector<harness::OffsetPoint> points =
      harness::offset_experiment(ck.agent, env, mags, cfg.offset_samples, cfg.seeds[0]);
  harness::write_offsets_csv(cfg.out_dir + "/offset_success.csv", points, cfg.structural_hash());
  for (const harness::OffsetPoint& p : points)
    std::cout << "offset " << p.magnitude << "  success " << p.success << "\n";
  return 0;
}

int trace_cmd(const ExperimentConfig& cfg, const rl::Checkpoint& ck) {
  const sim::DualArmEnv env(cfg.env());
  const std::uint64_t hash = cfg.structural_hash();
  const std::uint64_t seed = cfg.seeds[0];

  const auto reference = harness::rollout_trace(ck.agent, env, std::nullopt, seed);
  harness::write_trace_jsonl(cfg.out_dir + "/trace_reference.jsonl", reference, hash,
                             std::nullopt);

  const sim::DisturbanceSpec spec{{cfg.trace_force, cfg.trace_torque}, cfg.disturb_start,
                                  cfg.disturb_end};
  const auto disturbed = harness::rollout_trace(ck.agent, env, spec, seed);
  harness::write_trace_jsonl(cfg.out_dir + "/trace_disturbed.jsonl", disturbed, hash, spec);

  std::cout << "trace lengths: reference " << reference.size() << ", disturbed "
            << disturbed.size() << "\n";
  return 0;
}

}  // namespace

int run(const CliOptions& opts) {
  try {
    const bool is_train = opts.command == "train";
    if (!is_train && opts.command != "eval" && opts.command != "disturb" &&
        opts.command != "offset" && opts.command != "trace")
      throw ConfigError("unknown command '" + opts.command + "'");

    const ExperimentConfig cfg = load_config(opts);
    if (is_train) return train(cfg);

    if (opts.checkpoint.empty())
      throw ConfigError("command '" + opts.command + "' requires --checkpoint");
    const rl::Checkpoint ck = rl::load_checkpoint(opts.checkpoint, cfg.structural_hash());
    prepare_out_dir(cfg);

    if (opts.command == "eval") return eval_cmd(cfg, ck);
    if (opts.command == "disturb") return disturb_cmd(cfg, ck);
    if (opts.command == "offset") return offset_cmd(cfg, ck);
    return trace_cmd(cfg, ck);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}

}  // namespace dualarm::cli
