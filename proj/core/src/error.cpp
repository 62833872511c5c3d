#include "stepfill/error.hpp"

namespace stepfill {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::EmptySolution: return "EmptySolution";
    case Errc::UnbalancedMath: return "UnbalancedMath";
    case Errc::SpecialTokenCollision: return "SpecialTokenCollision";
    case Errc::MalformedPsm: return "MalformedPsm";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::Timeout: return "Timeout";
    case Errc::TransportError: return "TransportError";
    case Errc::FixtureMiss: return "FixtureMiss";
    case Errc::UnparsableQuestion: return "UnparsableQuestion";
    case Errc::SpecError: return "SpecError";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::TokenizerMismatch: return "TokenizerMismatch";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

bool is_backend_error(Errc code) noexcept {
  return code == Errc::Timeout || code == Errc::TransportError || code == Errc::FixtureMiss ||
         code == Errc::UnparsableQuestion;
}

}  // namespace stepfill
