#pragma once

// Agent-side plugin interfaces. A service-model plugin decodes and validates
// RAN function payloads and maps them onto PML API calls; a config plugin
// does the same for OAM configuration documents.

#include <any>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace hexsim::agent {

using nlohmann::json;

// One PML invocation derived from a decoded payload.
struct ActionCall {
  std::string api_id;
  std::any payload;
  std::vector<std::string> resources;  // resource keys touched, e.g. "slice/2"
};

using ReportDelivery = std::function<void(const json& report)>;

class ServiceModelPlugin {
 public:
  virtual ~ServiceModelPlugin() = default;

  virtual std::string name() const = 0;
  // Makes `ran_function_id` known to this plugin (called by configuration loading).
  virtual void bind_function(std::uint32_t ran_function_id) = 0;

  // Each decoder throws Error(UnknownFunction) or Error(SchemaViolation).
  virtual ActionCall control_action(std::uint32_t ran_function_id, const json& payload) const = 0;
  virtual ActionCall subscription_action(std::uint32_t ran_function_id, const json& payload,
                                         ReportDelivery deliver) const = 0;
  virtual ActionCall query_action(std::uint32_t ran_function_id, const json& payload) const = 0;
  // Call that undoes a subscription given the subscription action's result.
  virtual ActionCall unsubscribe_action(const std::any& subscription_result) const = 0;

  // Encodes a query action's result as a response payload.
  virtual json encode_query_result(const json& query_payload, const std::any& value) const = 0;
};

class ConfigPlugin {
 public:
  virtual ~ConfigPlugin() = default;

  virtual std::string name() const = 0;
  // Throws Error(ValidationFailed) when `doc` is not acceptable.
  virtual void validate(const json& doc) const = 0;
  virtual ActionCall config_action(const json& doc) const = 0;
};

}  // namespace hexsim::agent
