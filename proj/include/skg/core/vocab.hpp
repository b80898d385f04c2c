#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace skg::vocab {

// Attribute keys with fixed meaning across the toolkit.
inline constexpr std::string_view kValidity = "validity";
inline constexpr std::string_view kAction = "action";
inline constexpr std::string_view kFinal = "final";
inline constexpr std::string_view kApplies = "applies";
inline constexpr std::string_view kClauseId = "clause_id";
inline constexpr std::string_view kStage = "stage";
inline constexpr std::string_view kTimestamp = "timestamp";
inline constexpr std::string_view kRole = "role";
inline constexpr std::string_view kOrderStatus = "order_status";
inline constexpr std::string_view kServiceStage = "service_stage";
inline constexpr std::string_view kResponsibility = "responsibility";
inline constexpr std::string_view kComplaintType = "complaint_type";
inline constexpr std::string_view kMerchantResponse = "merchant_response";

const std::vector<std::string>& validity_values();
/// Service stages in lifecycle order.
const std::vector<std::string>& service_stages();
const std::vector<std::string>& parties();
const std::vector<std::string>& order_statuses();
const std::vector<std::string>& merchant_responses();
/// Standard complaint-type vocabulary (graphs may carry other types).
const std::vector<std::string>& complaint_types();

/// Position of a stage in lifecycle order, or nullopt for unknown stages.
std::optional<std::size_t> stage_rank(std::string_view stage);

}  // namespace skg::vocab
