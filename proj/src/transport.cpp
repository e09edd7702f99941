#include "hexsim/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <mutex>

#include "hexsim/error.hpp"

namespace hexsim::transport {

namespace {

struct Direction {
  std::mutex mu;
  std::condition_variable cv;
  e2lite::FrameReader reader;
  bool closed = false;
};

struct Link {
  Direction a_to_b;
  Direction b_to_a;
};

class InprocChannel : public Channel {
 public:
  InprocChannel(std::shared_ptr<Link> link, bool is_a)
      : link_(std::move(link)),
        out_(is_a ? link_->a_to_b : link_->b_to_a),
        in_(is_a ? link_->b_to_a : link_->a_to_b) {}

  ~InprocChannel() override { close(); }

  void send(const e2lite::Frame& frame) override {
    const auto bytes = e2lite::encode(frame);
    {
      std::lock_guard lock(out_.mu);
      if (out_.closed) throw Error(Errc::ConnectionClosed, "in-process channel closed");
      out_.reader.feed(bytes);
    }
    out_.cv.notify_one();
  }

  std::optional<e2lite::Frame> receive(milliseconds timeout) override {
    std::unique_lock lock(in_.mu);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (auto f = in_.reader.next()) return f;
      if (in_.closed) throw Error(Errc::ConnectionClosed, "in-process channel closed");
      if (in_.cv.wait_until(lock, deadline) == std::cv_status::timeout) {
        if (auto f = in_.reader.next()) return f;
        if (in_.closed) throw Error(Errc::ConnectionClosed, "in-process channel closed");
        return std::nullopt;
      }
    }
  }

  void close() override {
    for (Direction* d : {&out_, &in_}) {
      {
        std::lock_guard lock(d->mu);
        d->closed = true;
      }
      d->cv.notify_all();
    }
  }

  bool is_open() const override {
    std::lock_guard lock(out_.mu);
    return !out_.closed;
  }

 private:
  std::shared_ptr<Link> link_;
  Direction& out_;
  Direction& in_;
};

class TcpChannel : public Channel {
 public:
  explicit TcpChannel(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }

  ~TcpChannel() override {
    close();
    ::close(fd_);
  }

  void send(const e2lite::Frame& frame) override {
    const auto bytes = e2lite::encode(frame);
    std::lock_guard lock(send_mu_);
    if (closed_.load()) throw Error(Errc::ConnectionClosed, "tcp channel closed");
    std::size_t off = 0;
    while (off < bytes.size()) {
      const auto n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        closed_.store(true);
        throw Error(Errc::ConnectionClosed, std::string("send: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::optional<e2lite::Frame> receive(milliseconds timeout) override {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (auto f = reader_.next()) return f;
      if (peer_closed_) throw Error(Errc::ConnectionClosed, "tcp peer closed");
      const auto left = std::chrono::duration_cast<milliseconds>(deadline - std::chrono::steady_clock::now());
      pollfd p{fd_, POLLIN, 0};
      const int rc = ::poll(&p, 1, static_cast<int>(std::max<std::int64_t>(0, left.count())));
      if (rc < 0 && errno != EINTR) throw Error(Errc::ConnectionClosed, std::string("poll: ") + std::strerror(errno));
      if (rc == 0) return std::nullopt;
      if (rc < 0) continue;
      std::uint8_t buf[65536];
      const auto n = ::recv(fd_, buf, sizeof(buf), 0);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        peer_closed_ = true;
        continue;
      }
      if (n == 0) {
        peer_closed_ = true;
        continue;
      }
      reader_.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
    }
  }

  void close() override {
    if (!closed_.exchange(true)) ::shutdown(fd_, SHUT_RDWR);
  }

  bool is_open() const override { return !closed_.load() && !peer_closed_; }

 private:
  int fd_;
  std::mutex send_mu_;
  std::atomic<bool> closed_{false};
  bool peer_closed_ = false;
  e2lite::FrameReader reader_;
};

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw Error(Errc::Unreachable, "bad IPv4 address " + host);
  }
  return addr;
}

}  // namespace

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_inproc_pair() {
  auto link = std::make_shared<Link>();
  return {std::make_unique<InprocChannel>(link, true), std::make_unique<InprocChannel>(link, false)};
}

TcpListener::TcpListener(std::uint16_t port, const std::string& host) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw Error(Errc::Unreachable, std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  auto addr = make_addr(host, port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd_, 16) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd_);
    throw Error(Errc::Unreachable, "listen on " + host + ":" + std::to_string(port) + ": " + why);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() { close(); }

void TcpListener::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

std::unique_ptr<Channel> TcpListener::accept(milliseconds timeout) {
  pollfd p{fd_, POLLIN, 0};
  if (::poll(&p, 1, static_cast<int>(timeout.count())) <= 0) return nullptr;
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) return nullptr;
  return std::make_unique<TcpChannel>(fd);
}

std::unique_ptr<Channel> tcp_connect(const std::string& host, std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(Errc::Unreachable, std::string("socket: ") + std::strerror(errno));
  auto addr = make_addr(host, port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd);
    throw Error(Errc::Unreachable, host + ":" + std::to_string(port) + ": " + why);
  }
  return std::make_unique<TcpChannel>(fd);
}

}  // namespace hexsim::transport
