#pragma once

// E2-lite wire protocol: a fixed 12-byte big-endian header followed by a
// UTF-8 JSON payload.
//
//   offset 0  magic          'E' '2'
//   offset 2  version        u8 (1)
//   offset 3  msg_type       u8
//   offset 4  correlation_id u32
//   offset 8  payload_len    u32
//   offset 12 payload        payload_len bytes of JSON

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace hexsim::e2lite {

using nlohmann::json;

inline constexpr std::uint8_t kMagic0 = 0x45;
inline constexpr std::uint8_t kMagic1 = 0x32;
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 12;
inline constexpr std::uint32_t kMaxPayload = 16u << 20;

enum class MsgType : std::uint8_t {
  SetupRequest = 1,
  SetupResponse = 2,
  SubscriptionRequest = 3,
  SubscriptionResponse = 4,
  Indication = 5,
  ControlRequest = 6,
  ControlAck = 7,
  ControlFailure = 8,
  QueryRequest = 9,
  QueryResponse = 10,
  EditConfig = 11,
  ConfigAck = 12,
  AlarmNotification = 13,
};

std::string_view to_string(MsgType t);
bool is_known(MsgType t);
// Requests sent towards the agent by a RIC or SMO.
bool is_inbound_request(MsgType t);
// Success response type for a request; nullopt for non-requests.
std::optional<MsgType> response_for(MsgType request);

struct Frame {
  MsgType msg_type = MsgType::SetupRequest;  // may carry an unknown value after decode
  std::uint32_t correlation_id = 0;
  json payload = json::object();

  friend bool operator==(const Frame&, const Frame&) = default;
};

using Bytes = std::vector<std::uint8_t>;

// Throws Error(FrameTooLarge) when the serialized payload exceeds kMaxPayload.
Bytes encode(const Frame& frame);
void encode_into(const Frame& frame, Bytes& out);

// Decodes exactly one frame spanning all of `bytes`. Throws Error with
// BadMagic, BadVersion, ShortFrame, FrameTooLarge, BadJson, or InvalidInput
// (trailing bytes).
Frame decode(std::span<const std::uint8_t> bytes);

// Total frame length announced by a header prefix, or nullopt while fewer
// than kHeaderSize bytes are available. Validates magic, version and size.
std::optional<std::size_t> frame_length(std::span<const std::uint8_t> prefix);

// Incremental decoder for a reliable byte stream.
class FrameReader {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  // Next complete frame, or nullopt when more bytes are needed. A decode
  // error is thrown once and leaves the reader unusable.
  std::optional<Frame> next();
  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  Bytes buf_;
  std::size_t pos_ = 0;
};

}  // namespace hexsim::e2lite
