#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

namespace skg::util {

// Strict field access over one JSON object. Every failure is a SchemaError
// naming the JSON-pointer path. finish() rejects fields nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string path);

  const nlohmann::json& required(const std::string& key);
  const nlohmann::json* optional(const std::string& key);

  std::string string(const std::string& key);
  /// Required string that must not be empty.
  std::string nonempty(const std::string& key);
  std::optional<std::string> opt_string(const std::string& key);
  std::int64_t integer(const std::string& key);
  bool boolean(const std::string& key);
  const nlohmann::json& array(const std::string& key);
  const nlohmann::json& object(const std::string& key);

  std::string child(const std::string& key) const { return path_ + "/" + key; }
  const std::string& path() const { return path_; }

  void finish() const;

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

[[noreturn]] void schema_error(const std::string& path, const std::string& what);

/// Parses JSON text, turning syntax failures into SyntaxError with the byte
/// offset.
nlohmann::json parse_json(std::string_view bytes);

/// Compact dump with sorted keys and raw UTF-8; invalid UTF-8 is a SchemaError.
std::string dump_canonical(const nlohmann::json& j);

}  // namespace skg::util
