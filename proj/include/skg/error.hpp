#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace skg {

// Every failure the toolkit reports is an skg::Error carrying one of these
// codes. Structured context (paths, offsets, violations) goes in details().
enum class Errc {
  // skg-core
  SyntaxError,
  SchemaError,
  VersionError,
  InvalidGraph,
  CouplingMismatch,
  InvalidEdit,
  // constraint-engine
  DuplicateRuleId,
  TypeError,
  UnsatisfiableEdit,
  IdenticalVariant,
  InsufficientVariation,
  // synthesis-loop
  MissingPlaceholder,
  NoPayloadBlock,
  MultiplePayloadBlocks,
  StructuralError,
  TransportError,
  AuthError,
  ParseFailure,
  // corpus-builder
  MalformedCsv,
  MissingColumns,
  MissingAttribute,
  // eval-harness
  LengthMismatch,
  EmptyInput,
  OutOfRange,
  MissingAction,
  GraphNotFound,
  ReplayMismatch,
  // review-service
  DigestMismatch,
  NotFound,
  StageOrderViolation,
  DuplicateTask,
  WrongState,
  WrongReviewer,
  Unauthorized,
  Forbidden,
  BadRequest,
  Io,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, nlohmann::json details = nlohmann::json::object());

  Errc code() const noexcept { return code_; }
  const nlohmann::json& details() const noexcept { return details_; }

 private:
  Errc code_;
  nlohmann::json details_;
};

}  // namespace skg
