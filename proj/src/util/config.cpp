// SPDX-License-Identifier: Apache-2.0
#include "tivgan/util/config.hpp"

#include <fstream>
#include <sstream>

#include "tivgan/errors.hpp"

namespace tivgan {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string KeyValues::normalize_key(const std::string& key) {
  std::string k = trim(key);
  for (char& c : k)
    if (c == '-') c = '_';
  return k;
}

KeyValues KeyValues::parse(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || trim(line.substr(0, eq)).empty())
      throw FormatError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    kv.set(line.substr(0, eq), trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KeyValues::set(const std::string& key, const std::string& value) { entries_[normalize_key(key)] = value; }

bool KeyValues::contains(const std::string& key) const { return entries_.contains(normalize_key(key)); }

std::optional<std::string> KeyValues::get(const std::string& key) const {
  if (auto it = entries_.find(normalize_key(key)); it != entries_.end()) return it->second;
  return std::nullopt;
}

std::string KeyValues::dump() const {
  std::ostringstream os;
  for (const auto& [k, v] : entries_) os << k << " = " << v << '\n';
  return os.str();
}

}  // namespace tivgan
