#include "mhmb/config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mhmb/stats.h"

namespace mhmb {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) {
      return false;
    }
  }
  return true;
}

}  // namespace

Config Config::parse(std::string_view text, std::string source) {
  Config cfg;
  cfg.source_ = std::move(source);
  std::string section;
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    const std::string where = cfg.source_ + ":" + std::to_string(lineno) + ": ";

    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(where + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!section.empty() && !valid_key(section)) throw Error(where + "bad section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(where + "expected `key = value`");
    const std::string_view key = trim(line.substr(0, eq));
    std::string_view value = line.substr(eq + 1);
    if (const auto hash = value.find(" #"); hash != std::string_view::npos) {
      value = value.substr(0, hash);
    }
    value = trim(value);
    if (!valid_key(key)) throw Error(where + "bad key '" + std::string(key) + "'");
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    if (cfg.entries_.count(full)) throw Error(where + "duplicate key '" + full + "'");
    cfg.entries_[full] = Entry{std::string(value), lineno};
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void Config::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw Error("bad override key '" + key + "'");
  entries_[key] = Entry{value, 0};
}

const Config::Entry* Config::find(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

void Config::fail(const std::string& key, const std::string& what) const {
  const auto it = entries_.find(key);
  std::string where = source_;
  if (it != entries_.end() && it->second.line > 0) {
    where += ":" + std::to_string(it->second.line);
  } else if (it != entries_.end()) {
    where = "command line";
  }
  throw Error(where + ": " + key + ": " + what);
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get(const std::string& key) const {
  const Entry* e = find(key);
  if (!e) throw Error(source_ + ": missing required key '" + key + "'");
  return e->value;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  const Entry* e = find(key);
  return e ? e->value : fallback;
}

double Config::get_double(const std::string& key) const {
  const std::string v = get(key);
  double out = 0.0;
  std::size_t pos = 0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    fail(key, "expected a number, got '" + v + "'");
  }
  if (pos != v.size()) fail(key, "expected a number, got '" + v + "'");
  return out;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::uint64_t Config::get_uint(const std::string& key) const {
  const std::string v = get(key);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec == std::errc() && ptr == v.data() + v.size()) return out;
  // Accept integral values in scientific notation, e.g. 1e6.
  double d = 0.0;
  std::size_t pos = 0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == v.size() && d >= 0.0 && d < 1.8e19 && d == std::floor(d)) {
    return static_cast<std::uint64_t>(d);
  }
  fail(key, "expected a non-negative integer, got '" + v + "'");
}

std::uint64_t Config::get_uint(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? get_uint(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(key, "expected true/false, got '" + v + "'");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  const std::string v = get(key);
  std::vector<double> out;
  std::string_view rest = v;
  while (true) {
    const auto comma = rest.find(',');
    const std::string item(trim(rest.substr(0, comma)));
    std::size_t pos = 0;
    try {
      out.push_back(std::stod(item, &pos));
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != item.size()) fail(key, "expected a comma-separated list of numbers");
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

std::vector<std::string> Config::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

void Config::check_all_used() const {
  const auto u = unused();
  if (!u.empty()) fail(u.front(), "unknown key");
}

std::string Config::dump() const {
  std::string out;
  for (const auto& [k, e] : entries_) out += k + " = " + e.value + "\n";
  return out;
}

}  // namespace mhmb
