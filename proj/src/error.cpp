#include "hexsim/error.hpp"

namespace hexsim {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::DuplicateSliceId: return "DuplicateSliceId";
    case Errc::InvalidResourceConfig: return "InvalidResourceConfig";
    case Errc::OverSubscription: return "OverSubscription";
    case Errc::UnknownSlice: return "UnknownSlice";
    case Errc::DuplicateDrb: return "DuplicateDrb";
    case Errc::UnknownDrb: return "UnknownDrb";
    case Errc::UnknownId: return "UnknownId";
    case Errc::InfeasibleSnapshot: return "InfeasibleSnapshot";
    case Errc::InvalidInput: return "InvalidInput";
    case Errc::DuplicateApi: return "DuplicateApi";
    case Errc::UnknownApi: return "UnknownApi";
    case Errc::LockedOut: return "LockedOut";
    case Errc::ValidationFailed: return "ValidationFailed";
    case Errc::BadPeriod: return "BadPeriod";
    case Errc::BadMagic: return "BadMagic";
    case Errc::BadVersion: return "BadVersion";
    case Errc::ShortFrame: return "ShortFrame";
    case Errc::BadJson: return "BadJson";
    case Errc::FrameTooLarge: return "FrameTooLarge";
    case Errc::UnknownFunction: return "UnknownFunction";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::MalformedConfig: return "MalformedConfig";
    case Errc::Unreachable: return "Unreachable";
    case Errc::SetupRejected: return "SetupRejected";
    case Errc::NotActivated: return "NotActivated";
    case Errc::ResourceLockedByOther: return "ResourceLockedByOther";
    case Errc::Overloaded: return "Overloaded";
    case Errc::Overwritten: return "Overwritten";
    case Errc::ConnectionClosed: return "ConnectionClosed";
    case Errc::UnknownChain: return "UnknownChain";
    case Errc::ScenarioError: return "ScenarioError";
    case Errc::Timeout: return "Timeout";
  }
  return "Unknown";
}

}  // namespace hexsim
