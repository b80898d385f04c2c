#include "skg/core/vocab.hpp"

#include <algorithm>

namespace skg::vocab {

const std::vector<std::string>& validity_values() {
  static const std::vector<std::string> v{"sufficient", "insufficient", "contested"};
  return v;
}

const std::vector<std::string>& service_stages() {
  static const std::vector<std::string> v{"pre_delivery", "in_transit", "post_delivery", "after_sales"};
  return v;
}

const std::vector<std::string>& parties() {
  static const std::vector<std::string> v{"user", "merchant", "platform", "carrier"};
  return v;
}

const std::vector<std::string>& order_statuses() {
  static const std::vector<std::string> v{"placed", "paid", "shipped", "delivered", "returned", "cancelled"};
  return v;
}

const std::vector<std::string>& merchant_responses() {
  static const std::vector<std::string> v{"none", "accepted", "refused", "partial_offer", "no_reply"};
  return v;
}

const std::vector<std::string>& complaint_types() {
  static const std::vector<std::string> v{"billing_error", "damaged_item",    "late_delivery", "non_delivery",
                                          "refund_delay",  "service_quality", "wrong_item"};
  return v;
}

std::optional<std::size_t> stage_rank(std::string_view stage) {
  const auto& stages = service_stages();
  const auto it = std::find(stages.begin(), stages.end(), stage);
  if (it == stages.end()) return std::nullopt;
  return static_cast<std::size_t>(it - stages.begin());
}

}  // namespace skg::vocab
