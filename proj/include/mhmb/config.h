#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mhmb {

// Flat `key = value` configuration. Lines starting with `#` (after
// whitespace) are comments, as is anything after ` #` on a value line.
// A `[section]` line prefixes the following keys with `section.`; dotted
// keys such as `test.m = 50` work without sections too.
class Config {
 public:
  static Config parse(std::string_view text, std::string source = "<string>");
  static Config load(const std::filesystem::path& path);

  // Command-line override; replaces any value from the file.
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;  // throws when missing
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_uint(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated list of reals.
  std::vector<double> get_doubles(const std::string& key) const;

  // Marks a key as recognized without reading it, e.g. a parameter of a
  // test that is not selected in this run.
  void recognize(const std::string& key) const { used_.insert(key); }

  // Keys never read by any getter; used to reject typos.
  std::vector<std::string> unused() const;
  // Throws naming the first unused key and its line.
  void check_all_used() const;

  // Source text form, keys sorted, one per line.
  std::string dump() const;
  const std::string& source() const { return source_; }

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;  // 0 for overrides
  };
  const Entry* find(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  std::string source_;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

}  // namespace mhmb
