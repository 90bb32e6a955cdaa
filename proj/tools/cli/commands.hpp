#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace stadr::cli {

/// Command-line overrides; each one replaces the matching config key.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<std::string> model;
  std::optional<std::string> scale;
  std::optional<int> count;
};

const std::vector<std::string>& command_names();

/// Loads the config, applies overrides, runs `command` and writes
/// `config.resolved` into the output directory. Returns the exit code.
int run_command(const std::string& command, const Overrides& overrides, std::ostream& log);

int cmd_simulate(RunConfig& config, std::ostream& log);
int cmd_fit(RunConfig& config, std::ostream& log);
int cmd_predict(RunConfig& config, std::ostream& log);
int cmd_score(RunConfig& config, std::ostream& log);
int cmd_study_sim(RunConfig& config, std::ostream& log);
int cmd_study_auv(RunConfig& config, std::ostream& log);

}  // namespace stadr::cli
