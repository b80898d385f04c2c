#include "skg/error.hpp"

namespace skg {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::SchemaError: return "SchemaError";
    case Errc::VersionError: return "VersionError";
    case Errc::InvalidGraph: return "InvalidGraph";
    case Errc::CouplingMismatch: return "CouplingMismatch";
    case Errc::InvalidEdit: return "InvalidEdit";
    case Errc::DuplicateRuleId: return "DuplicateRuleId";
    case Errc::TypeError: return "TypeError";
    case Errc::UnsatisfiableEdit: return "UnsatisfiableEdit";
    case Errc::IdenticalVariant: return "IdenticalVariant";
    case Errc::InsufficientVariation: return "InsufficientVariation";
    case Errc::MissingPlaceholder: return "MissingPlaceholder";
    case Errc::NoPayloadBlock: return "NoPayloadBlock";
    case Errc::MultiplePayloadBlocks: return "MultiplePayloadBlocks";
    case Errc::StructuralError: return "StructuralError";
    case Errc::TransportError: return "TransportError";
    case Errc::AuthError: return "AuthError";
    case Errc::ParseFailure: return "ParseFailure";
    case Errc::MalformedCsv: return "MalformedCsv";
    case Errc::MissingColumns: return "MissingColumns";
    case Errc::MissingAttribute: return "MissingAttribute";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::MissingAction: return "MissingAction";
    case Errc::GraphNotFound: return "GraphNotFound";
    case Errc::ReplayMismatch: return "ReplayMismatch";
    case Errc::DigestMismatch: return "DigestMismatch";
    case Errc::NotFound: return "NotFound";
    case Errc::StageOrderViolation: return "StageOrderViolation";
    case Errc::DuplicateTask: return "DuplicateTask";
    case Errc::WrongState: return "WrongState";
    case Errc::WrongReviewer: return "WrongReviewer";
    case Errc::Unauthorized: return "Unauthorized";
    case Errc::Forbidden: return "Forbidden";
    case Errc::BadRequest: return "BadRequest";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message, nlohmann::json details)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      details_(std::move(details)) {}

}  // namespace skg
