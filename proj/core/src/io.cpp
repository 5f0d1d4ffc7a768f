#include "hypercauchy/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

namespace hypercauchy {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw std::invalid_argument("CsvTable: needs columns");
}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_real(v));
  add_row(std::move(cells));
}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) throw std::invalid_argument("CsvTable: cell count mismatch");
  rows_.push_back(std::move(cells));
}

void CsvTable::write(std::ostream& os) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    os << columns_[i] << (i + 1 < columns_.size() ? ',' : '\n');
  for (const auto& row : rows_)
    for (std::size_t i = 0; i < row.size(); ++i)
      os << row[i] << (i + 1 < row.size() ? ',' : '\n');
}

std::string CsvTable::to_string() const {
  std::ostringstream os;
  write(os);
  return os.str();
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<ConfigSection> parse_config_text(std::string_view text) {
  std::vector<ConfigSection> sections;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section header");
      std::string name(trim(line.substr(1, line.size() - 2)));
      if (name.empty())
        throw ConfigError("config line " + std::to_string(line_no) + ": empty section name");
      sections.push_back({std::move(name), {}});
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (sections.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": key before any [section]");
    for (const auto& [k, v] : sections.back().entries)
      if (k == key)
        throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    sections.back().entries.emplace_back(std::move(key), std::move(value));
  }
  return sections;
}

std::vector<ConfigSection> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

bool SectionView::has(const std::string& key) const {
  for (const auto& [k, v] : section_->entries)
    if (k == key) return true;
  return false;
}

const std::string* SectionView::find(const std::string& key) {
  for (const auto& [k, v] : section_->entries)
    if (k == key) {
      consumed_.insert(key);
      return &v;
    }
  return nullptr;
}

std::string SectionView::get_string(const std::string& key, const std::string& fallback) {
  const std::string* v = find(key);
  return v ? *v : fallback;
}

std::string SectionView::require_string(const std::string& key) {
  const std::string* v = find(key);
  if (!v) throw ConfigError("section [" + section_->name + "]: missing key '" + key + "'");
  return *v;
}

long SectionView::get_int(const std::string& key, long fallback) {
  const std::string* v = find(key);
  if (!v) return fallback;
  char* end = nullptr;
  long r = std::strtol(v->c_str(), &end, 10);
  if (end == v->c_str() || *end != '\0')
    throw ConfigError("section [" + section_->name + "]: key '" + key + "' is not an integer");
  return r;
}

double SectionView::get_real(const std::string& key, double fallback) {
  const std::string* v = find(key);
  if (!v) return fallback;
  char* end = nullptr;
  double r = std::strtod(v->c_str(), &end);
  if (end == v->c_str() || *end != '\0')
    throw ConfigError("section [" + section_->name + "]: key '" + key + "' is not a number");
  return r;
}

bool SectionView::get_bool(const std::string& key, bool fallback) {
  const std::string* v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("section [" + section_->name + "]: key '" + key + "' is not a boolean");
}

std::vector<double> SectionView::get_real_list(const std::string& key,
                                               std::vector<double> fallback) {
  const std::string* v = find(key);
  if (!v) return fallback;
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= v->size()) {
    std::size_t comma = v->find(',', pos);
    if (comma == std::string::npos) comma = v->size();
    std::string item(trim(std::string_view(*v).substr(pos, comma - pos)));
    if (item.empty())
      throw ConfigError("section [" + section_->name + "]: empty item in list '" + key + "'");
    char* end = nullptr;
    out.push_back(std::strtod(item.c_str(), &end));
    if (end == item.c_str() || *end != '\0')
      throw ConfigError("section [" + section_->name + "]: bad number in list '" + key + "'");
    pos = comma + 1;
    if (comma == v->size()) break;
  }
  return out;
}

void SectionView::reject_unknown_keys() const {
  for (const auto& [k, v] : section_->entries)
    if (!consumed_.count(k))
      throw ConfigError("section [" + section_->name + "]: unknown key '" + k + "'");
}

}  // namespace hypercauchy
