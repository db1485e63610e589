#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>

// Command parameters merged from an optional key=value file and flags.
// Flag values win; keys outside the allowed set are rejected.
namespace rebot::io {

class RunConfig {
 public:
  explicit RunConfig(std::set<std::string> allowed) : allowed_(std::move(allowed)) {}

  // Lines `key=value`; blank lines and `#` comments skipped. Throws
  // UsageError for unknown keys or malformed lines.
  void load_file(const std::filesystem::path& path);
  void load_text(std::string_view text);
  void set_flag(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback = "") const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

 private:
  void check_key(const std::string& key) const;

  std::set<std::string> allowed_;
  std::map<std::string, std::string> file_;
  std::map<std::string, std::string> flags_;
};

}  // namespace rebot::io
