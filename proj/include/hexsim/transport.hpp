#pragma once

// Reliable duplex frame channels: an in-process pair and TCP.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "hexsim/e2lite.hpp"

namespace hexsim::transport {

using std::chrono::milliseconds;

class Channel {
 public:
  virtual ~Channel() = default;

  // Thread-safe. Throws Error(ConnectionClosed) once the channel is closed.
  virtual void send(const e2lite::Frame& frame) = 0;
  // Single reader. Returns nullopt on timeout; throws Error(ConnectionClosed)
  // after the peer closed and every buffered frame was consumed, and the
  // decoder's Error on a malformed stream.
  virtual std::optional<e2lite::Frame> receive(milliseconds timeout) = 0;
  // Idempotent; wakes a blocked receive on both ends.
  virtual void close() = 0;
  virtual bool is_open() const = 0;
};

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_inproc_pair();

class TcpListener {
 public:
  // Binds host:port; port 0 picks an ephemeral port.
  explicit TcpListener(std::uint16_t port = 0, const std::string& host = "127.0.0.1");
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  // nullptr on timeout.
  std::unique_ptr<Channel> accept(milliseconds timeout);
  void close();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

// Throws Error(Unreachable) when the connection cannot be established.
std::unique_ptr<Channel> tcp_connect(const std::string& host, std::uint16_t port);

}  // namespace hexsim::transport
