#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "experiments.hpp"
#include "hypercauchy/io.hpp"

namespace fs = std::filesystem;
using hypercauchy::ConfigError;
using hypercauchy::tools::Artifact;
using hypercauchy::tools::ExperimentResult;
using hypercauchy::tools::RunOptions;

namespace {

int run(const std::string& config_path, const std::string& out_dir,
        const RunOptions& opts, bool quiet) {
  const ExperimentResult result = hypercauchy::tools::run_experiment(
      hypercauchy::parse_config_file(config_path), opts);

  fs::create_directories(out_dir);
  for (const Artifact& artifact : result.artifacts) {
    const fs::path path = fs::path(out_dir) / artifact.filename;
    std::ofstream os(path, std::ios::binary);
    if (!os) {
      std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
      return 1;
    }
    os << artifact.content;
  }

  if (!quiet) {
    for (const std::string& line : result.summary)
      std::printf("%s\n", line.c_str());
    std::printf("%s\n", result.passed ? "PASS" : "FAIL");
  }
  return result.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Runs one configured experiment against the hypercauchy library and "
      "writes its CSV artifacts."};

  std::string config_path;
  std::string out_dir = ".";
  bool no_timestamp = false;
  bool quiet = false;
  std::uint64_t seed = 0;

  app.add_option("--config", config_path, "experiment config file")
      ->required();
  app.add_option("--out-dir", out_dir, "directory for CSV artifacts");
  app.add_flag("--no-timestamp", no_timestamp,
               "omit the generation-time header line from artifacts");
  auto* seed_opt =
      app.add_option("--seed", seed, "override the config's random seed");
  app.add_flag("--quiet", quiet, "suppress the summary printout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  RunOptions opts;
  opts.timestamp = !no_timestamp;
  opts.has_seed_override = seed_opt->count() > 0;
  opts.seed_override = seed;

  try {
    return run(config_path, out_dir, opts, quiet);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
