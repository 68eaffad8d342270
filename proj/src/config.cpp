#include "misinfo/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "misinfo/error.hpp"

namespace misinfo {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Strips a trailing '#' comment that is not inside quotes.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(std::string_view value) {
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
    return std::string(value.substr(1, value.size() - 2));
  }
  return std::string(value);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::string_view origin) {
  KeyValueConfig config;
  config.origin_ = std::string(origin);
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string_view::npos) {
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(config.origin_ + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw UsageError(config.origin_ + ":" + std::to_string(line_no) + ": empty key");
    }
    std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    config.entries_[std::move(full)] = unquote(value);
  }
  return config;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

bool KeyValueConfig::contains(std::string_view key) const { return entries_.find(key) != entries_.end(); }

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_string(std::string_view key, std::string fallback) const {
  auto value = get(key);
  return value ? *value : std::move(fallback);
}

std::string KeyValueConfig::require_string(std::string_view key) const {
  auto value = get(key);
  if (!value || value->empty()) {
    throw UsageError(origin_ + ": missing required field '" + std::string(key) + "'");
  }
  return *value;
}

double KeyValueConfig::get_double(std::string_view key, double fallback) const {
  auto value = get(key);
  if (!value) return fallback;
  const std::string& s = *value;
  char* end = nullptr;
  const double parsed = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw UsageError(origin_ + ": '" + std::string(key) + "' is not a number: " + s);
  }
  return parsed;
}

std::int64_t KeyValueConfig::get_int(std::string_view key, std::int64_t fallback) const {
  auto value = get(key);
  if (!value) return fallback;
  std::int64_t parsed = 0;
  auto [ptr, ec] = std::from_chars(value->data(), value->data() + value->size(), parsed);
  if (ec != std::errc{} || ptr != value->data() + value->size()) {
    throw UsageError(origin_ + ": '" + std::string(key) + "' is not an integer: " + *value);
  }
  return parsed;
}

bool KeyValueConfig::get_bool(std::string_view key, bool fallback) const {
  auto value = get(key);
  if (!value) return fallback;
  if (*value == "true" || *value == "1" || *value == "yes" || *value == "on") return true;
  if (*value == "false" || *value == "0" || *value == "no" || *value == "off") return false;
  throw UsageError(origin_ + ": '" + std::string(key) + "' is not a boolean: " + *value);
}

std::vector<std::string> KeyValueConfig::get_list(std::string_view key) const {
  auto value = get(key);
  if (!value) return {};
  std::string_view body = trim(*value);
  if (!body.empty() && body.front() == '[') {
    if (body.back() != ']') {
      throw UsageError(origin_ + ": '" + std::string(key) + "' has an unterminated list");
    }
    body = body.substr(1, body.size() - 2);
  }
  std::vector<std::string> items;
  while (!trim(body).empty()) {
    const auto comma = body.find(',');
    items.push_back(unquote(trim(body.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  return items;
}

std::vector<double> KeyValueConfig::get_double_list(std::string_view key) const {
  std::vector<double> values;
  for (const auto& item : get_list(key)) {
    char* end = nullptr;
    const double parsed = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size()) {
      throw UsageError(origin_ + ": '" + std::string(key) + "' has a non-numeric entry: " + item);
    }
    values.push_back(parsed);
  }
  return values;
}

void KeyValueConfig::set(std::string key, std::string value) { entries_[std::move(key)] = std::move(value); }

std::string env_var_name(std::string_view prefix, std::string_view key) {
  std::string name(prefix);
  for (char c : key) {
    name.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return name;
}

std::vector<std::string> KeyValueConfig::apply_env_overrides(std::string_view prefix,
                                                             const std::vector<std::string>& keys) {
  std::vector<std::string> applied;
  for (const auto& key : keys) {
    const std::string name = env_var_name(prefix, key);
    if (const char* value = std::getenv(name.c_str())) {
      entries_[key] = unquote(trim(value));
      applied.push_back(key);
    }
  }
  return applied;
}

}  // namespace misinfo
