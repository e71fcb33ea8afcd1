#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hglab {

// INI-style config: `key = value` lines grouped under `[section]` headers,
// looked up as "section.key". '#' and ';' start comments. All getters
// throw Error(ConfigError) naming the offending field.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Comma-separated values; empty string means empty list.
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<std::uint64_t> get_u64_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

  std::vector<std::string> keys() const;
  const std::string& origin() const { return origin_; }

  // The raw text as parsed, for snapshotting into artifact directories.
  const std::string& text() const { return text_; }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
  std::string text_;
};

}  // namespace hglab
