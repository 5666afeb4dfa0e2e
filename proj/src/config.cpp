#include "falris/config.hpp"

#include <fstream>
#include <istream>
#include <stdexcept>

#include "csv.hpp"

namespace falris {

Config Config::parse(std::istream& in) {
  Config c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string t(detail::trim(line));
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key(detail::trim(std::string_view(t).substr(0, eq)));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    c.values_[key] = std::string(detail::trim(std::string_view(t).substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config '" + path + "'");
  return parse(f);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

int Config::get_int(const std::string& key, int fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  auto v = detail::parse_double(it->second);
  if (!v || *v != static_cast<int>(*v))
    throw std::invalid_argument("config key " + key + ": expected an integer, got '" + it->second + "'");
  return static_cast<int>(*v);
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  auto v = detail::parse_double(it->second);
  if (!v) throw std::invalid_argument("config key " + key + ": expected a number, got '" + it->second + "'");
  return *v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config key " + key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> Config::get_strings(const std::string& key) const {
  std::vector<std::string> out;
  auto it = values_.find(key);
  if (it == values_.end()) return out;
  std::string cur;
  for (char ch : it->second + ",") {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return out;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : get_strings(key)) {
    auto v = detail::parse_double(s);
    if (!v) throw std::invalid_argument("config key " + key + ": expected numbers, got '" + s + "'");
    out.push_back(*v);
  }
  return out;
}

}  // namespace falris
