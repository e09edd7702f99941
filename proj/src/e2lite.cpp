#include "hexsim/e2lite.hpp"

#include <string>

#include "hexsim/error.hpp"

namespace hexsim::e2lite {

std::string_view to_string(MsgType t) {
  switch (t) {
    case MsgType::SetupRequest: return "SetupRequest";
    case MsgType::SetupResponse: return "SetupResponse";
    case MsgType::SubscriptionRequest: return "SubscriptionRequest";
    case MsgType::SubscriptionResponse: return "SubscriptionResponse";
    case MsgType::Indication: return "Indication";
    case MsgType::ControlRequest: return "ControlRequest";
    case MsgType::ControlAck: return "ControlAck";
    case MsgType::ControlFailure: return "ControlFailure";
    case MsgType::QueryRequest: return "QueryRequest";
    case MsgType::QueryResponse: return "QueryResponse";
    case MsgType::EditConfig: return "EditConfig";
    case MsgType::ConfigAck: return "ConfigAck";
    case MsgType::AlarmNotification: return "AlarmNotification";
  }
  return "Unknown";
}

bool is_known(MsgType t) {
  const auto v = static_cast<std::uint8_t>(t);
  return v >= 1 && v <= 13;
}

bool is_inbound_request(MsgType t) {
  return t == MsgType::SubscriptionRequest || t == MsgType::ControlRequest ||
         t == MsgType::QueryRequest || t == MsgType::EditConfig;
}

std::optional<MsgType> response_for(MsgType request) {
  switch (request) {
    case MsgType::SetupRequest: return MsgType::SetupResponse;
    case MsgType::SubscriptionRequest: return MsgType::SubscriptionResponse;
    case MsgType::ControlRequest: return MsgType::ControlAck;
    case MsgType::QueryRequest: return MsgType::QueryResponse;
    case MsgType::EditConfig: return MsgType::ConfigAck;
    default: return std::nullopt;
  }
}

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

}  // namespace

void encode_into(const Frame& frame, Bytes& out) {
  const std::string body = frame.payload.dump();
  if (body.size() > kMaxPayload) {
    throw Error(Errc::FrameTooLarge, std::to_string(body.size()) + " payload bytes");
  }
  out.reserve(out.size() + kHeaderSize + body.size());
  out.push_back(kMagic0);
  out.push_back(kMagic1);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(frame.msg_type));
  put_u32(out, frame.correlation_id);
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
}

Bytes encode(const Frame& frame) {
  Bytes out;
  encode_into(frame, out);
  return out;
}

std::optional<std::size_t> frame_length(std::span<const std::uint8_t> prefix) {
  if (!prefix.empty() && prefix[0] != kMagic0) throw Error(Errc::BadMagic, "first byte");
  if (prefix.size() > 1 && prefix[1] != kMagic1) throw Error(Errc::BadMagic, "second byte");
  if (prefix.size() > 2 && prefix[2] != kVersion) {
    throw Error(Errc::BadVersion, "version " + std::to_string(prefix[2]));
  }
  if (prefix.size() < kHeaderSize) return std::nullopt;
  const auto len = get_u32(prefix, 8);
  if (len > kMaxPayload) throw Error(Errc::FrameTooLarge, std::to_string(len) + " payload bytes");
  return kHeaderSize + len;
}

Frame decode(std::span<const std::uint8_t> bytes) {
  const auto total = frame_length(bytes);
  if (!total) throw Error(Errc::ShortFrame, "header needs 12 bytes");
  if (bytes.size() < *total) throw Error(Errc::ShortFrame, "payload truncated");
  if (bytes.size() > *total) throw Error(Errc::InvalidInput, "trailing bytes after frame");

  Frame f;
  f.msg_type = static_cast<MsgType>(bytes[3]);
  f.correlation_id = get_u32(bytes, 4);
  const auto* body = reinterpret_cast<const char*>(bytes.data() + kHeaderSize);
  f.payload = json::parse(body, body + (*total - kHeaderSize), nullptr, false);
  if (f.payload.is_discarded()) throw Error(Errc::BadJson, "payload is not a JSON document");
  return f;
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) {
  if (pos_ > 0 && pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  }
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Frame> FrameReader::next() {
  std::span<const std::uint8_t> rest(buf_.data() + pos_, buf_.size() - pos_);
  const auto total = frame_length(rest);
  if (!total || rest.size() < *total) return std::nullopt;
  auto frame = decode(rest.first(*total));
  pos_ += *total;
  if (pos_ > 65536 && pos_ * 2 > buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }
  return frame;
}

}  // namespace hexsim::e2lite
