#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace misinfo {

// Minimal TOML-like key/value configuration:
//
//   # comment
//   top_level = 3
//   [section]
//   name = "quoted string"
//   list = [0.15, 0.85]
//
// Keys are addressed as "section.name". Values are kept as unquoted text and
// converted on access; a malformed value throws UsageError naming the key.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, std::string_view origin = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;

  std::string get_string(std::string_view key, std::string fallback) const;
  double get_double(std::string_view key, double fallback) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<std::string> get_list(std::string_view key) const;
  std::vector<double> get_double_list(std::string_view key) const;

  std::string require_string(std::string_view key) const;

  void set(std::string key, std::string value);

  // For each key in `keys`, an environment variable PREFIX + KEY (upper-cased,
  // '.' replaced by '_') overrides the file value. Returns the keys overridden.
  std::vector<std::string> apply_env_overrides(std::string_view prefix,
                                               const std::vector<std::string>& keys);

  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }
  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::string, std::less<>> entries_;
  std::string origin_;
};

std::string env_var_name(std::string_view prefix, std::string_view key);

}  // namespace misinfo
