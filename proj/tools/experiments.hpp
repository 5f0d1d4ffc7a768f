#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hypercauchy/io.hpp"

namespace hypercauchy::tools {

// One output file of an experiment, held in memory until the driver writes
// it; deterministic content given the config and seed.
struct Artifact {
  std::string filename;
  std::string content;
};

struct ExperimentResult {
  bool passed = true;
  std::vector<Artifact> artifacts;
  std::vector<std::string> summary;
};

struct RunOptions {
  bool timestamp = true;  // prepend a "# generated ..." line to artifacts
  bool has_seed_override = false;
  std::uint64_t seed_override = 0;
};

// Executes the experiment described by a parsed config. Configuration
// problems (unknown kind or key, out-of-range values, unreadable referenced
// files) surface as ConfigError or std::invalid_argument; any other
// exception, and a false `passed`, mean the experiment ran and failed its
// acceptance condition.
ExperimentResult run_experiment(const std::vector<ConfigSection>& config,
                                const RunOptions& opts);

// The experiments `kind = all` runs, as (name, config text) pairs. The
// bundled config files mirror these texts byte for byte.
std::vector<std::pair<std::string, std::string>> bundled_experiments();

}  // namespace hypercauchy::tools
