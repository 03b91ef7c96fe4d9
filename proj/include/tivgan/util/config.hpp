// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace tivgan {

/// Flat `key = value` text file. `#` starts a comment; blank lines are
/// ignored; keys use dashes or underscores interchangeably.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValues load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool contains(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }
  std::string dump() const;

  static std::string normalize_key(const std::string& key);

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace tivgan
