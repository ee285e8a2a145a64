#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsrl {

// Bad or missing configuration; the message names the field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Flat key-value text with [section] headers:
//
//   [control]
//   episodes = 6000   ; trailing comments after ';' or '#'
//   ds = 1, 2, 3
//
// Keys are addressed as "section.key"; keys before the first header have no
// prefix. Lists are comma separated.
class Config {
 public:
  Config() = default;

  static Config parse(std::istream& in, const std::string& origin = "<config>");
  // Relative paths inside the file resolve against its directory.
  static Config load(const std::string& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  void erase(const std::string& key);

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::size_t> get_sizes(const std::string& key) const;
  std::vector<std::size_t> get_sizes(const std::string& key,
                                     std::vector<std::size_t> fallback) const;

  // Sections and keys in sorted order, one `key = value` per line.
  std::string canonical() const;
  // FNV-1a of canonical(), as 16 hex digits.
  std::string hash_hex() const;

  std::string resolve_path(const std::string& path) const;
  const std::string& base_dir() const { return base_dir_; }

  // Keys that were present but never read.
  std::vector<std::string> unused_keys() const;

 private:
  const std::string& raw(const std::string& key) const;

  std::map<std::string, std::string> values_;
  std::string base_dir_;
  mutable std::set<std::string> read_;
};

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace fsrl
