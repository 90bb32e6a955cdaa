#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace stadr::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` configuration. Blank lines and lines starting with '#'
/// are ignored; values may be quoted. Every key must be one of known_keys().
///
/// Reads through get() record the resolved value (given or default), and
/// write_resolved() emits them in a form parse() accepts again.
class RunConfig {
 public:
  static RunConfig parse(std::istream& is, const std::string& origin = "config");
  static RunConfig load(const std::filesystem::path& path);
  static const std::set<std::string>& known_keys();

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key, const std::string& fallback);
  std::optional<std::string> get_optional(const std::string& key);
  double get_double(const std::string& key, double fallback);
  long long get_int(const std::string& key, long long fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<std::string> get_list(const std::string& key);
  /// Required value; throws ConfigError naming the key when absent.
  std::string require(const std::string& key);

  /// Given keys plus every key read so far, sorted.
  void write_resolved(std::ostream& os) const;
  const std::map<std::string, std::string>& values() const { return values_; }

  static std::string format_double(double v);

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> resolved_;
};

}  // namespace stadr::cli
