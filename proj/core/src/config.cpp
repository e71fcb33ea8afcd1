#include "hglab/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hglab/errors.hpp"

namespace hglab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  c.text_ = text;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']', Err::ConfigError,
              origin + ":" + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      require(!section.empty(), Err::ConfigError,
              origin + ":" + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, Err::ConfigError,
            origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    require(!key.empty(), Err::ConfigError,
            origin + ":" + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    c.values_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Err::ConfigError, "cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

std::string Config::get_string(const std::string& key) const {
  auto it = values_.find(key);
  require(it != values_.end(), Err::ConfigError, "missing field '" + key + "' in " + origin_);
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::int64_t Config::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  std::int64_t out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  require(ec == std::errc() && p == v.data() + v.size(), Err::ConfigError,
          "field '" + key + "' is not an integer: '" + v + "'");
  return out;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    require(used == v.size(), Err::ConfigError,
            "field '" + key + "' is not a number: '" + v + "'");
    return out;
  } catch (const std::logic_error&) {
    fail(Err::ConfigError, "field '" + key + "' is not a number: '" + v + "'");
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get_string(key);
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  fail(Err::ConfigError, "field '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_commas(get_string(key))) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      require(used == item.size(), Err::ConfigError,
              "field '" + key + "' has a non-numeric item: '" + item + "'");
    } catch (const std::logic_error&) {
      fail(Err::ConfigError, "field '" + key + "' has a non-numeric item: '" + item + "'");
    }
  }
  return out;
}

std::vector<std::uint64_t> Config::get_u64_list(const std::string& key) const {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_commas(get_string(key))) {
    std::uint64_t v{};
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    require(ec == std::errc() && p == item.data() + item.size(), Err::ConfigError,
            "field '" + key + "' has a non-integer item: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> Config::get_string_list(const std::string& key) const {
  return split_commas(get_string(key));
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

}  // namespace hglab
