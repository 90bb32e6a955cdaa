#include "run_config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace stadr::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::set<std::string>& RunConfig::known_keys() {
  static const std::set<std::string> keys{
      // grid
      "x_min", "x_max", "y_min", "y_max", "m", "n", "buffer", "num_times", "dt",
      // model and run
      "model", "scale", "basis_per_axis", "params", "init", "seed", "workers", "out", "count", "sigma_n2",
      "add_noise",
      // optimizer
      "algorithm", "step_size", "beta1", "beta2", "decay", "epsilon", "max_iterations", "num_probes", "window",
      "tolerance", "gradient_tolerance", "exact_gradient", "start_iteration", "advection_step_scale", "final_step_fraction",
      // data
      "data", "observations", "truth", "mean", "sd", "sd_samples", "include_nugget", "format",
      // studies
      "models", "n_train", "n_test", "mask", "n_paths", "train_fields", "test_fields", "path_straightness",
      "path_revisit", "path_boundary", "path_temperature", "speed_mps", "cell_size_m", "mission_minutes",
      "step_seconds"};
  return keys;
}

RunConfig RunConfig::parse(std::istream& is, const std::string& origin) {
  RunConfig c;
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string where = origin + ":" + std::to_string(number);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!known_keys().count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    if (c.values_.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    c.values_[key] = value;
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  return parse(is, path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!known_keys().count(key)) throw ConfigError("unknown key '" + key + "'");
  values_[key] = value;
}

std::string RunConfig::format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) {
  auto it = values_.find(key);
  const std::string v = it == values_.end() ? fallback : it->second;
  resolved_[key] = v;
  return v;
}

std::optional<std::string> RunConfig::get_optional(const std::string& key) {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  resolved_[key] = it->second;
  return it->second;
}

std::string RunConfig::require(const std::string& key) {
  auto v = get_optional(key);
  if (!v || v->empty()) throw ConfigError("missing required key '" + key + "'");
  return *v;
}

double RunConfig::get_double(const std::string& key, double fallback) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    resolved_[key] = format_double(fallback);
    return fallback;
  }
  double v = 0.0;
  const std::string& s = it->second;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw ConfigError("key '" + key + "' expects a number, got '" + s + "'");
  resolved_[key] = s;
  return v;
}

long long RunConfig::get_int(const std::string& key, long long fallback) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    resolved_[key] = std::to_string(fallback);
    return fallback;
  }
  long long v = 0;
  const std::string& s = it->second;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size())
    throw ConfigError("key '" + key + "' expects an integer, got '" + s + "'");
  resolved_[key] = s;
  return v;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    resolved_[key] = fallback ? "true" : "false";
    return fallback;
  }
  std::string s = it->second;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  bool v = false;
  if (s == "true" || s == "1" || s == "yes") v = true;
  else if (s == "false" || s == "0" || s == "no") v = false;
  else throw ConfigError("key '" + key + "' expects true or false, got '" + it->second + "'");
  resolved_[key] = v ? "true" : "false";
  return v;
}

std::vector<std::string> RunConfig::get_list(const std::string& key) {
  std::vector<std::string> out;
  auto v = get_optional(key);
  if (!v) return out;
  std::istringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void RunConfig::write_resolved(std::ostream& os) const {
  std::map<std::string, std::string> all = values_;
  for (const auto& [k, v] : resolved_) all[k] = v;
  for (const auto& [k, v] : all) os << k << " = " << v << '\n';
}

}  // namespace stadr::cli
