#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace flowsentry {

/// Flat key=value option set. Accepts whitespace- or newline-separated
/// `key=value` pairs with `#` comments; this is both the --config file format
/// and the option-string format of the C command API.
class Options {
 public:
  Options() = default;

  static Options parse(const std::string& text);
  static Options from_file(const std::string& path);

  /// Later values win; used to layer CLI flags over a config file.
  void merge(const Options& over);

  void set(const std::string& key, std::string value);
  bool has(const std::string& key) const;

  std::string get(const std::string& key, const std::string& fallback = "") const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace flowsentry
