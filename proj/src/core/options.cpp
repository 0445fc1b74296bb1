#include "core/options.hpp"

#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace flowsentry {

Options Options::parse(const std::string& text) {
  Options opts;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string token;
    while (fields >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos || eq == 0)
        fail(Errc::InvalidArgument, "expected key=value, got: " + token);
      opts.values_[token.substr(0, eq)] = token.substr(eq + 1);
    }
  }
  return opts;
}

Options Options::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(text);
}

void Options::merge(const Options& over) {
  for (const auto& [k, v] : over.values_) values_[k] = v;
}

void Options::set(const std::string& key, std::string value) { values_[key] = std::move(value); }

bool Options::has(const std::string& key) const { return values_.contains(key); }

std::string Options::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::int64_t Options::get_int(const std::string& key, std::int64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const std::int64_t v = std::stoll(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    fail(Errc::InvalidArgument, "option " + key + " wants an integer, got: " + it->second);
  }
}

std::uint64_t Options::get_uint(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    fail(Errc::InvalidArgument, "option " + key + " wants an unsigned integer, got: " + it->second);
  }
}

double Options::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    fail(Errc::InvalidArgument, "option " + key + " wants a number, got: " + it->second);
  }
}

bool Options::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
  if (it->second == "false" || it->second == "0" || it->second == "no") return false;
  fail(Errc::InvalidArgument, "option " + key + " wants a boolean, got: " + it->second);
}

}  // namespace flowsentry
