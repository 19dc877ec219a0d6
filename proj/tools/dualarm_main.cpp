#include "dualarm/run.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv) {
  CLI::App app{"Dual-arm peg-in-hole: train and evaluate goal-conditioned insertion policies"};
  app.require_subcommand(1);

  dualarm::cli::CliOptions opts;
  const char* descriptions[][2] = {
      {"train", "Train one agent per seed; writes checkpoints and the success-rate CSV"},
      {"eval", "Deterministic success rate of a checkpoint"},
      {"disturb", "Disturbance-recovery study (episode duration vs deviation)"},
      {"offset", "Success rate under random peg-mount offsets"},
      {"trace", "Export reference and disturbed q_des traces as JSON lines"},
  };
  for (const auto& d : descriptions) {
    CLI::App* sub = app.add_subcommand(d[0], d[1]);
    sub->add_option("--config", opts.config_path, "Config file (key = value lines)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seeds, "Seed override (repeatable)");
    sub->add_option("--out", opts.out_dir, "Output directory override");
    sub->add_option("--checkpoint", opts.checkpoint, "Checkpoint path (required unless training)");
    sub->add_flag("--long-run", opts.long_run, "Full-scale profile (7 joints, original budget)");
    sub->callback([&opts, sub] { opts.command = sub->get_name(); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad usage is a configuration error
  }
  return dualarm::cli::run(opts);
}
