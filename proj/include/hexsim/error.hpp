#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hexsim {

enum class Errc {
  // slice model
  DuplicateSliceId,
  InvalidResourceConfig,
  OverSubscription,
  UnknownSlice,
  DuplicateDrb,
  UnknownDrb,
  UnknownId,
  // scheduler
  InfeasibleSnapshot,
  InvalidInput,
  // mediation layer
  DuplicateApi,
  UnknownApi,
  LockedOut,
  ValidationFailed,
  BadPeriod,
  // wire protocol
  BadMagic,
  BadVersion,
  ShortFrame,
  BadJson,
  FrameTooLarge,
  UnknownFunction,
  SchemaViolation,
  // agent
  MalformedConfig,
  Unreachable,
  SetupRejected,
  NotActivated,
  ResourceLockedByOther,
  Overloaded,
  Overwritten,
  ConnectionClosed,
  Timeout,
  // simulation
  UnknownChain,
  ScenarioError,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
  explicit Error(Errc code) : std::runtime_error(std::string(to_string(code))), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace hexsim
