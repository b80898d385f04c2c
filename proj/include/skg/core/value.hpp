#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

namespace skg {

// Exact decimal: mantissa * 10^-scale, normalized so the mantissa carries no
// trailing zeros. "12.50" and "12.5" are the same value and render as "12.5".
class Decimal {
 public:
  static constexpr int kMaxScale = 18;

  Decimal() = default;
  Decimal(std::int64_t mantissa, int scale);

  static std::optional<Decimal> parse(std::string_view text);

  std::int64_t mantissa() const noexcept { return mantissa_; }
  int scale() const noexcept { return scale_; }
  double to_double() const;
  std::string to_string() const;

  friend bool operator==(const Decimal&, const Decimal&) = default;
  friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b);

 private:
  std::int64_t mantissa_ = 0;
  int scale_ = 0;
};

// UTC instant, second precision, rendered RFC 3339 ("2024-03-01T12:00:00Z").
struct Timestamp {
  std::int64_t seconds = 0;

  static std::optional<Timestamp> parse(std::string_view text);
  std::string to_string() const;

  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

// Typed attribute value: string | integer | decimal | timestamp | boolean.
class Value {
 public:
  using Storage = std::variant<std::string, std::int64_t, Decimal, Timestamp, bool>;

  Value() : v_(std::string()) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(const char* s) : v_(std::string(s)) {}
  Value(std::string_view s) : v_(std::string(s)) {}
  Value(std::int64_t i) : v_(i) {}
  Value(int i) : v_(static_cast<std::int64_t>(i)) {}
  Value(Decimal d) : v_(d) {}
  Value(Timestamp t) : v_(t) {}
  Value(bool b) : v_(b) {}

  const Storage& storage() const noexcept { return v_; }

  bool is_string() const noexcept { return std::holds_alternative<std::string>(v_); }
  bool is_integer() const noexcept { return std::holds_alternative<std::int64_t>(v_); }
  bool is_decimal() const noexcept { return std::holds_alternative<Decimal>(v_); }
  bool is_timestamp() const noexcept { return std::holds_alternative<Timestamp>(v_); }
  bool is_bool() const noexcept { return std::holds_alternative<bool>(v_); }
  bool is_numeric() const noexcept { return is_integer() || is_decimal(); }

  const std::string& as_string() const { return std::get<std::string>(v_); }
  std::int64_t as_integer() const { return std::get<std::int64_t>(v_); }
  const Decimal& as_decimal() const { return std::get<Decimal>(v_); }
  Timestamp as_timestamp() const { return std::get<Timestamp>(v_); }
  bool as_bool() const { return std::get<bool>(v_); }

  /// Human-readable rendering (strings unquoted).
  std::string to_display() const;

  friend bool operator==(const Value&, const Value&) = default;

 private:
  Storage v_;
};

using AttrMap = std::map<std::string, Value>;

/// Ordering between two values when one is defined: numeric (integer/decimal
/// mixed), timestamp, or string. Booleans and mixed kinds only compare equal or
/// unordered.
std::partial_ordering compare_values(const Value& a, const Value& b);

/// Object-notation encoding. Strings, integers and booleans map to native JSON;
/// decimals and timestamps are tagged objects {"$decimal": "..."} and
/// {"$timestamp": "..."}.
nlohmann::json value_to_json(const Value& v);
Value value_from_json(const nlohmann::json& j, const std::string& path);

nlohmann::json attrs_to_json(const AttrMap& attrs);
AttrMap attrs_from_json(const nlohmann::json& j, const std::string& path);

}  // namespace skg
