#pragma once

#include <iosfwd>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hypercauchy {

// Shortest decimal form that round-trips a double ("%.17g").
std::string format_real(double v);

// Fixed-column CSV table; numeric cells are rendered with format_real.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);
  void add_row(const std::vector<double>& values);
  void add_row(std::vector<std::string> cells);
  std::size_t row_count() const { return rows_.size(); }
  void write(std::ostream& os) const;
  std::string to_string() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Plain-text config: [section] headers over key = value lines; '#' or ';'
// starts a comment. Duplicate keys within a section are rejected.
struct ConfigSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;
};

std::vector<ConfigSection> parse_config_text(std::string_view text);
std::vector<ConfigSection> parse_config_file(const std::string& path);

// Typed accessor over one section that records which keys were consumed, so
// drivers can reject unknown keys.
class SectionView {
 public:
  explicit SectionView(const ConfigSection& section) : section_(&section) {}

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback);
  std::string require_string(const std::string& key);
  long get_int(const std::string& key, long fallback);
  double get_real(const std::string& key, double fallback);
  bool get_bool(const std::string& key, bool fallback);
  // comma-separated reals
  std::vector<double> get_real_list(const std::string& key, std::vector<double> fallback);

  // Throws ConfigError naming any key that was never consumed.
  void reject_unknown_keys() const;
  const std::string& name() const { return section_->name; }

 private:
  const std::string* find(const std::string& key);
  const ConfigSection* section_;
  std::set<std::string> consumed_;
};

}  // namespace hypercauchy
