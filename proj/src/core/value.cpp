#include "skg/core/value.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "skg/error.hpp"

namespace skg {

namespace {

constexpr __int128 pow10_i128(int n) {
  __int128 r = 1;
  for (int i = 0; i < n; ++i) r *= 10;
  return r;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

}  // namespace

Decimal::Decimal(std::int64_t mantissa, int scale) : mantissa_(mantissa), scale_(scale) {
  if (scale_ < 0 || scale_ > kMaxScale) throw Error(Errc::SchemaError, "decimal scale out of range");
  while (scale_ > 0 && mantissa_ % 10 == 0) {
    mantissa_ /= 10;
    --scale_;
  }
  if (mantissa_ == 0) scale_ = 0;
}

std::optional<Decimal> Decimal::parse(std::string_view text) {
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  std::string_view int_part = text;
  std::string_view frac_part;
  if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    int_part = text.substr(0, dot);
    frac_part = text.substr(dot + 1);
    if (!all_digits(frac_part)) return std::nullopt;
  }
  if (!all_digits(int_part)) return std::nullopt;
  // Trailing zeros of the fraction never change the value.
  while (!frac_part.empty() && frac_part.back() == '0') frac_part.remove_suffix(1);
  if (frac_part.size() > static_cast<std::size_t>(kMaxScale)) return std::nullopt;
  std::string digits(int_part);
  digits.append(frac_part);
  std::int64_t mantissa = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), mantissa);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  return Decimal(negative ? -mantissa : mantissa, static_cast<int>(frac_part.size()));
}

double Decimal::to_double() const {
  return static_cast<double>(mantissa_) / static_cast<double>(pow10_i128(scale_));
}

std::string Decimal::to_string() const {
  const bool negative = mantissa_ < 0;
  const auto magnitude = negative ? 0ULL - static_cast<unsigned long long>(mantissa_)
                                  : static_cast<unsigned long long>(mantissa_);
  std::string digits = std::to_string(magnitude);
  if (scale_ > 0) {
    if (digits.size() <= static_cast<std::size_t>(scale_)) {
      digits.insert(0, static_cast<std::size_t>(scale_) - digits.size() + 1, '0');
    }
    digits.insert(digits.size() - static_cast<std::size_t>(scale_), 1, '.');
  }
  return negative ? "-" + digits : digits;
}

std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
  const int scale = std::max(a.scale_, b.scale_);
  const __int128 lhs = static_cast<__int128>(a.mantissa_) * pow10_i128(scale - a.scale_);
  const __int128 rhs = static_cast<__int128>(b.mantissa_) * pow10_i128(scale - b.scale_);
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::optional<Timestamp> Timestamp::parse(std::string_view text) {
  // Exactly YYYY-MM-DDTHH:MM:SSZ.
  if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
      text[16] != ':' || text[19] != 'Z') {
    return std::nullopt;
  }
  auto field = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    const auto part = text.substr(pos, len);
    if (!all_digits(part)) return std::nullopt;
    int value = 0;
    std::from_chars(part.data(), part.data() + part.size(), value);
    return value;
  };
  const auto y = field(0, 4), mo = field(5, 2), d = field(8, 2);
  const auto h = field(11, 2), mi = field(14, 2), s = field(17, 2);
  if (!y || !mo || !d || !h || !mi || !s) return std::nullopt;
  if (*h > 23 || *mi > 59 || *s > 59) return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)}, day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return Timestamp{static_cast<std::int64_t>(days) * 86400 + *h * 3600 + *mi * 60 + *s};
}

std::string Timestamp::to_string() const {
  using namespace std::chrono;
  std::int64_t days = seconds / 86400;
  std::int64_t rem = seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(rem / 3600), static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60));
  return buf;
}

std::string Value::to_display() const {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else {
          return x.to_string();
        }
      },
      v_);
}

std::partial_ordering compare_values(const Value& a, const Value& b) {
  if (a.is_numeric() && b.is_numeric()) {
    const Decimal lhs = a.is_integer() ? Decimal(a.as_integer(), 0) : a.as_decimal();
    const Decimal rhs = b.is_integer() ? Decimal(b.as_integer(), 0) : b.as_decimal();
    return lhs <=> rhs;
  }
  if (a.is_timestamp() && b.is_timestamp()) return a.as_timestamp() <=> b.as_timestamp();
  if (a.is_string() && b.is_string()) return a.as_string() <=> b.as_string();
  if (a.is_bool() && b.is_bool()) {
    return a.as_bool() == b.as_bool() ? std::partial_ordering::equivalent : std::partial_ordering::unordered;
  }
  return std::partial_ordering::unordered;
}

nlohmann::json value_to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> nlohmann::json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Decimal>) {
          return {{"$decimal", x.to_string()}};
        } else if constexpr (std::is_same_v<T, Timestamp>) {
          return {{"$timestamp", x.to_string()}};
        } else {
          return x;
        }
      },
      v.storage());
}

Value value_from_json(const nlohmann::json& j, const std::string& path) {
  if (j.is_string()) return Value(j.get<std::string>());
  if (j.is_boolean()) return Value(j.get<bool>());
  if (j.is_number_integer()) return Value(j.get<std::int64_t>());
  if (j.is_object() && j.size() == 1) {
    if (const auto it = j.find("$decimal"); it != j.end() && it->is_string()) {
      if (auto d = Decimal::parse(it->get<std::string>())) return Value(*d);
      throw Error(Errc::SchemaError, "malformed decimal at " + path, {{"path", path}});
    }
    if (const auto it = j.find("$timestamp"); it != j.end() && it->is_string()) {
      if (auto t = Timestamp::parse(it->get<std::string>())) return Value(*t);
      throw Error(Errc::SchemaError, "malformed timestamp at " + path, {{"path", path}});
    }
  }
  throw Error(Errc::SchemaError, "unsupported value at " + path, {{"path", path}});
}

nlohmann::json attrs_to_json(const AttrMap& attrs) {
  auto out = nlohmann::json::object();
  for (const auto& [k, v] : attrs) out[k] = value_to_json(v);
  return out;
}

AttrMap attrs_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw Error(Errc::SchemaError, "expected object at " + path, {{"path", path}});
  AttrMap out;
  for (const auto& [k, v] : j.items()) {
    if (k.empty()) throw Error(Errc::SchemaError, "empty attribute key at " + path, {{"path", path}});
    out.emplace(k, value_from_json(v, path + "/" + k));
  }
  return out;
}

}  // namespace skg
