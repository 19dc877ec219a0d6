#pragma once

#include "dualarm/config.hpp"

#include <string>
#include <vector>

namespace dualarm::cli {

struct CliOptions {
  std::string command;               // train | eval | disturb | offset | trace
  std::string config_path;           // empty -> built-in profile defaults
  std::vector<std::uint64_t> seeds;  // non-empty -> overrides config seeds
  std::string out_dir;               // non-empty -> overrides config out_dir
  std::string checkpoint;            // required by every command except train
  bool long_run = false;
};

/// Execute one subcommand end to end; returns the process exit code
/// (0 success, 1 run failure, 2 configuration error).
int run(const CliOptions& opts);

}  // namespace dualarm::cli
