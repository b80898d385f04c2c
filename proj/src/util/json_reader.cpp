#include "skg/util/json_reader.hpp"

#include "skg/error.hpp"

namespace skg::util {

void schema_error(const std::string& path, const std::string& what) {
  throw Error(Errc::SchemaError, what + " at " + (path.empty() ? "/" : path), {{"path", path.empty() ? "/" : path}});
}

ObjectReader::ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) schema_error(path_, "expected object");
}

const nlohmann::json& ObjectReader::required(const std::string& key) {
  const auto it = j_.find(key);
  if (it == j_.end()) schema_error(child(key), "missing field");
  seen_.insert(key);
  return *it;
}

const nlohmann::json* ObjectReader::optional(const std::string& key) {
  const auto it = j_.find(key);
  if (it == j_.end() || it->is_null()) {
    if (it != j_.end()) seen_.insert(key);
    return nullptr;
  }
  seen_.insert(key);
  return &*it;
}

std::string ObjectReader::string(const std::string& key) {
  const auto& v = required(key);
  if (!v.is_string()) schema_error(child(key), "expected string");
  return v.get<std::string>();
}

std::string ObjectReader::nonempty(const std::string& key) {
  auto s = string(key);
  if (s.empty()) schema_error(child(key), "expected non-empty string");
  return s;
}

std::optional<std::string> ObjectReader::opt_string(const std::string& key) {
  const auto* v = optional(key);
  if (v == nullptr) return std::nullopt;
  if (!v->is_string()) schema_error(child(key), "expected string");
  return v->get<std::string>();
}

std::int64_t ObjectReader::integer(const std::string& key) {
  const auto& v = required(key);
  if (!v.is_number_integer()) schema_error(child(key), "expected integer");
  return v.get<std::int64_t>();
}

bool ObjectReader::boolean(const std::string& key) {
  const auto& v = required(key);
  if (!v.is_boolean()) schema_error(child(key), "expected boolean");
  return v.get<bool>();
}

const nlohmann::json& ObjectReader::array(const std::string& key) {
  const auto& v = required(key);
  if (!v.is_array()) schema_error(child(key), "expected array");
  return v;
}

const nlohmann::json& ObjectReader::object(const std::string& key) {
  const auto& v = required(key);
  if (!v.is_object()) schema_error(child(key), "expected object");
  return v;
}

void ObjectReader::finish() const {
  for (const auto& [k, _] : j_.items()) {
    if (!seen_.contains(k)) schema_error(child(k), "unknown field");
  }
}

nlohmann::json parse_json(std::string_view bytes) {
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::SyntaxError, "malformed document at byte " + std::to_string(e.byte) + ": " + e.what(),
                {{"offset", e.byte}});
  }
}

std::string dump_canonical(const nlohmann::json& j) {
  try {
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
  } catch (const nlohmann::json::type_error& e) {
    throw Error(Errc::SchemaError, std::string("document is not valid UTF-8: ") + e.what());
  }
}

}  // namespace skg::util
