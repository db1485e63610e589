#include "rebot/io/run_config.hpp"

#include <charconv>
#include <sstream>

#include "rebot/errors.hpp"
#include "rebot/io/ppm.hpp"

namespace rebot::io {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename U>
U parse_as(const std::string& key, const std::string& value) {
  U v{};
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size()) {
    throw UsageError("bad value for " + key + ": '" + value + "'");
  }
  return v;
}

}  // namespace

void RunConfig::check_key(const std::string& key) const {
  if (allowed_.count(key) == 0) throw UsageError("unknown config key '" + key + "'");
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError&) {
    throw UsageError("cannot read config file " + path.string());
  }
  load_text(text);
}

void RunConfig::load_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    check_key(key);
    file_[key] = trim(line.substr(eq + 1));
  }
}

void RunConfig::set_flag(const std::string& key, const std::string& value) {
  check_key(key);
  flags_[key] = value;
}

bool RunConfig::has(const std::string& key) const {
  return flags_.count(key) != 0 || file_.count(key) != 0;
}

std::string RunConfig::get(const std::string& key, const std::string& fallback) const {
  if (auto it = flags_.find(key); it != flags_.end()) return it->second;
  if (auto it = file_.find(key); it != file_.end()) return it->second;
  return fallback;
}

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? parse_as<std::int64_t>(key, get(key)) : fallback;
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? parse_as<std::uint64_t>(key, get(key)) : fallback;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_as<double>(key, get(key)) : fallback;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw UsageError("bad boolean for " + key + ": '" + v + "'");
}

}  // namespace rebot::io
