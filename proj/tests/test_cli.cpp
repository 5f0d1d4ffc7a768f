#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "experiments.hpp"

namespace fs = std::filesystem;

namespace {

const char* cli_bin() { return HYPERCAUCHY_CLI_BIN; }
const char* config_dir() { return HYPERCAUCHY_CONFIG_DIR; }

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(cli_bin()) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("hypercauchy_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  fs::path path = dir / "config.cfg";
  std::ofstream os(path, std::ios::binary);
  os << text;
  return path;
}

// Cells of one named column, skipping comment lines.
std::vector<double> csv_column(const fs::path& path, const std::string& name) {
  std::ifstream is(path);
  REQUIRE(is.good());
  std::string line;
  std::vector<std::string> header;
  while (std::getline(is, line) && (line.empty() || line[0] == '#')) {
  }
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) header.push_back(cell);
  std::size_t column = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) column = i;
  REQUIRE(column < header.size());
  std::vector<double> values;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ls(line);
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    REQUIRE(column < cells.size());
    values.push_back(std::stod(cells[column]));
  }
  return values;
}

}  // namespace

TEST_CASE("missing config flag is a usage error") {
  CHECK(run_cli("") == 2);
}

TEST_CASE("nonexistent config path is a config error") {
  CHECK(run_cli("--config /nonexistent/experiment.cfg") == 2);
}

TEST_CASE("malformed config text is a config error") {
  fs::path dir = fresh_dir("malformed");
  fs::path cfg = write_config(dir, "[experiment\nkind = solve\n");
  CHECK(run_cli("--config " + cfg.string()) == 2);
  fs::remove_all(dir);
}

TEST_CASE("unknown keys are rejected") {
  fs::path dir = fresh_dir("unknown_key");
  fs::path cfg = write_config(dir,
                              "[experiment]\n"
                              "kind = solve\n"
                              "\n"
                              "[solve]\n"
                              "system = advection\n"
                              "mode_count = 32\n");
  CHECK(run_cli("--config " + cfg.string() + " --out-dir " + dir.string()) ==
        2);
  fs::remove_all(dir);
}

TEST_CASE("unknown kinds and sections are rejected") {
  fs::path dir = fresh_dir("unknown_kind");
  fs::path cfg = write_config(dir, "[experiment]\nkind = sorcery\n");
  CHECK(run_cli("--config " + cfg.string()) == 2);
  fs::path cfg2 = write_config(dir,
                               "[experiment]\n"
                               "kind = solve\n"
                               "\n"
                               "[lifetime]\n"
                               "amplitudes = 1.0\n");
  CHECK(run_cli("--config " + cfg2.string()) == 2);
  fs::remove_all(dir);
}

TEST_CASE("nonpositive numeric parameters are rejected") {
  fs::path dir = fresh_dir("nonpositive");
  fs::path cfg = write_config(dir,
                              "[experiment]\n"
                              "kind = solve\n"
                              "\n"
                              "[solve]\n"
                              "system = advection\n"
                              "t_end = -1.0\n");
  CHECK(run_cli("--config " + cfg.string()) == 2);
  fs::remove_all(dir);
}

TEST_CASE("bundled advection run conserves the monitored norm") {
  fs::path dir = fresh_dir("advection");
  const std::string cfg = std::string(config_dir()) + "/advection.cfg";
  CHECK(run_cli("--config " + cfg + " --out-dir " + dir.string() +
                " --quiet") == 0);
  std::vector<double> hk = csv_column(dir / "advection_trajectory.csv",
                                      "hk_norm");
  REQUIRE(hk.size() > 10);
  double lo = hk.front(), hi = hk.front();
  for (double v : hk) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi - lo <= 1e-8);
  fs::remove_all(dir);
}

TEST_CASE("a failed acceptance condition exits with one") {
  fs::path dir = fresh_dir("failed");
  fs::path cfg = write_config(dir,
                              "[experiment]\n"
                              "kind = breakdown\n"
                              "\n"
                              "[breakdown]\n"
                              "system = burgers\n"
                              "modes = 64\n"
                              "profile = sine\n"
                              "amplitude = 1.0\n"
                              "t_max = 2.0\n"
                              "threshold = 40.0\n"
                              "expect = none\n");
  CHECK(run_cli("--config " + cfg.string() + " --out-dir " + dir.string()) ==
        1);
  fs::remove_all(dir);
}

TEST_CASE("reruns without timestamps are byte-identical") {
  fs::path dir_a = fresh_dir("rerun_a");
  fs::path dir_b = fresh_dir("rerun_b");
  const std::string cfg = std::string(config_dir()) + "/exhaustion_plan.cfg";
  CHECK(run_cli("--config " + cfg + " --out-dir " + dir_a.string() +
                " --no-timestamp --quiet") == 0);
  CHECK(run_cli("--config " + cfg + " --out-dir " + dir_b.string() +
                " --no-timestamp --quiet") == 0);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(dir_a)) {
    const fs::path twin = dir_b / entry.path().filename();
    REQUIRE(fs::exists(twin));
    CHECK(slurp(entry.path()) == slurp(twin));
    ++compared;
  }
  CHECK(compared == 3);
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("seed override reshuffles suite-driven experiments") {
  fs::path dir_a = fresh_dir("seed_a");
  fs::path dir_b = fresh_dir("seed_b");
  const std::string cfg = std::string(config_dir()) + "/moser_products.cfg";
  CHECK(run_cli("--config " + cfg + " --out-dir " + dir_a.string() +
                " --no-timestamp --quiet") == 0);
  CHECK(run_cli("--config " + cfg + " --out-dir " + dir_b.string() +
                " --no-timestamp --quiet --seed 99") == 0);
  CHECK(slurp(dir_a / "moser_products_ratios.csv") !=
        slurp(dir_b / "moser_products_ratios.csv"));
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("bundled config files mirror the embedded texts") {
  for (const auto& [name, text] : hypercauchy::tools::bundled_experiments()) {
    const fs::path path = fs::path(config_dir()) / (name + ".cfg");
    REQUIRE(fs::exists(path));
    CHECK(slurp(path) == text);
  }
}

TEST_CASE("the full bundled suite passes end to end") {
  fs::path dir = fresh_dir("full_suite");
  const std::string cfg = std::string(config_dir()) + "/full_suite.cfg";
  CHECK(run_cli("--config " + cfg + " --out-dir " + dir.string() +
                " --quiet") == 0);
  std::size_t artifacts = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    (void)entry;
    ++artifacts;
  }
  CHECK(artifacts >= 25);
  fs::remove_all(dir);
}
