// Copyright 2026 The dapfl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dapfl/transport.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "dapfl/errors.h"

namespace dapfl::transport {
namespace {

constexpr std::uint8_t kAck = 0x06;
constexpr std::uint8_t kNak = 0x15;
constexpr int kIoTimeoutMs = 10000;

std::string Errno(const std::string& what) { return what + ": " + std::strerror(errno); }

class Socket {
 public:
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() {
    if (fd_ >= 0) ::close(fd_);
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

bool WaitFor(int fd, short events, int timeout_ms) {
  pollfd p{fd, events, 0};
  int rc;
  do {
    rc = ::poll(&p, 1, timeout_ms);
  } while (rc < 0 && errno == EINTR);
  return rc > 0;
}

void WriteAll(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    if (!WaitFor(fd, POLLOUT, kIoTimeoutMs)) throw TransportError("socket write timed out");
    ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(Errno("send"));
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

// Reads exactly len bytes; returns false on a clean EOF before any byte.
bool ReadAll(int fd, std::uint8_t* data, std::size_t len) {
  std::size_t got = 0;
  while (got < len) {
    if (!WaitFor(fd, POLLIN, kIoTimeoutMs)) throw TransportError("socket read timed out");
    ssize_t n = ::recv(fd, data + got, len - got, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(Errno("recv"));
    }
    if (n == 0) {
      if (got == 0) return false;
      throw TruncatedError("connection closed mid-frame");
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

sockaddr_in MakeAddress(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  std::string h = host == "localhost" ? "127.0.0.1" : host;
  if (::inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
    throw TransportError("not an IPv4 address: " + host);
  }
  return addr;
}

}  // namespace

void Mailbox::Push(wire::Envelope e) {
  {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(e));
  }
  cv_.notify_all();
}

std::optional<wire::Envelope> Mailbox::Pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  if (!cv_.wait_for(lock, timeout, [&] { return !queue_.empty(); })) return std::nullopt;
  wire::Envelope e = std::move(queue_.front());
  queue_.pop_front();
  return e;
}

std::optional<wire::Envelope> Mailbox::PopFrom(EndpointId sender,
                                               std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  std::optional<wire::Envelope> out;
  auto take = [&] {
    for (auto it = queue_.begin(); it != queue_.end(); ++it) {
      if (it->sender == sender) {
        out = std::move(*it);
        queue_.erase(it);
        return true;
      }
    }
    return false;
  };
  cv_.wait_for(lock, timeout, take);
  return out;
}

std::size_t Mailbox::size() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

void InProcessBus::Register(EndpointId id) {
  std::lock_guard lock(mu_);
  boxes_.try_emplace(id, std::make_unique<Mailbox>());
}

bool InProcessBus::IsRegistered(EndpointId id) const {
  std::lock_guard lock(mu_);
  return boxes_.contains(id);
}

Mailbox& InProcessBus::Box(EndpointId id) const {
  std::lock_guard lock(mu_);
  auto it = boxes_.find(id);
  if (it == boxes_.end()) throw TransportError("unknown endpoint " + std::to_string(id));
  return *it->second;
}

void InProcessBus::Send(EndpointId to, const wire::Envelope& envelope) {
  Mailbox& box = Box(to);
  Bytes frame = wire::Frame(envelope);
  Observe(to, frame);
  box.Push(wire::Unframe(frame));
}

std::optional<wire::Envelope> InProcessBus::Receive(EndpointId self,
                                                    std::chrono::milliseconds timeout) {
  return Box(self).Pop(timeout);
}

std::optional<wire::Envelope> InProcessBus::ReceiveFrom(
    EndpointId self, EndpointId sender, std::chrono::milliseconds timeout) {
  return Box(self).PopFrom(sender, timeout);
}

TcpTransport::~TcpTransport() { Shutdown(); }

std::uint16_t TcpTransport::Listen(EndpointId self, const std::string& host,
                                   std::uint16_t port) {
  sockaddr_in addr = MakeAddress(host, port);
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError(Errno("socket"));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(fd, 64) != 0) {
    std::string msg = Errno("bind/listen " + host + ":" + std::to_string(port));
    ::close(fd);
    throw TransportError(msg);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  std::uint16_t bound = ntohs(addr.sin_port);

  std::lock_guard lock(mu_);
  if (listeners_.contains(self)) {
    ::close(fd);
    throw TransportError("endpoint already listening: " + std::to_string(self));
  }
  auto listener = std::make_unique<Listener>();
  listener->fd = fd;
  Listener* raw = listener.get();
  listeners_[self] = std::move(listener);
  peers_[self] = Address{host, bound};
  raw->thread = std::thread([this, raw] { AcceptLoop(raw); });
  return bound;
}

void TcpTransport::AddPeer(EndpointId id, const std::string& host, std::uint16_t port) {
  std::lock_guard lock(mu_);
  peers_[id] = Address{host, port};
}

void TcpTransport::Shutdown() {
  stopping_ = true;
  std::map<EndpointId, std::unique_ptr<Listener>> listeners;
  {
    std::lock_guard lock(mu_);
    listeners.swap(listeners_);
  }
  for (auto& [id, l] : listeners) {
    if (l->thread.joinable()) l->thread.join();
    ::close(l->fd);
  }
}

void TcpTransport::AcceptLoop(Listener* listener) {
  while (!stopping_) {
    if (!WaitFor(listener->fd, POLLIN, 50)) continue;
    int conn = ::accept(listener->fd, nullptr, nullptr);
    if (conn < 0) continue;
    Socket sock(conn);
    std::uint8_t reply = kNak;
    try {
      Bytes frame(wire::kHeaderBytes);
      if (!ReadAll(conn, frame.data(), frame.size())) continue;
      wire::Header h = wire::ParseHeader(frame);
      frame.resize(wire::kHeaderBytes + h.length);
      if (h.length > 0 && !ReadAll(conn, frame.data() + wire::kHeaderBytes, h.length)) {
        throw TruncatedError("connection closed before payload");
      }
      listener->inbox.Push(wire::Unframe(frame));
      reply = kAck;
    } catch (const Error&) {
      reply = kNak;
    }
    try {
      WriteAll(conn, &reply, 1);
    } catch (const Error&) {
      // The sender reports the missing acknowledgment.
    }
  }
}

Mailbox& TcpTransport::Inbox(EndpointId id) {
  std::lock_guard lock(mu_);
  auto it = listeners_.find(id);
  if (it == listeners_.end()) {
    throw TransportError("endpoint not listening locally: " + std::to_string(id));
  }
  return it->second->inbox;
}

void TcpTransport::Send(EndpointId to, const wire::Envelope& envelope) {
  Address peer;
  {
    std::lock_guard lock(mu_);
    auto it = peers_.find(to);
    if (it == peers_.end()) throw TransportError("unknown endpoint " + std::to_string(to));
    peer = it->second;
  }
  Bytes frame = wire::Frame(envelope);
  Observe(to, frame);
  sockaddr_in addr = MakeAddress(peer.host, peer.port);
  Socket sock(::socket(AF_INET, SOCK_STREAM, 0));
  if (sock.get() < 0) throw TransportError(Errno("socket"));
  if (::connect(sock.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw TransportError(Errno("connect " + peer.host + ":" + std::to_string(peer.port)));
  }
  WriteAll(sock.get(), frame.data(), frame.size());
  ::shutdown(sock.get(), SHUT_WR);
  std::uint8_t reply = 0;
  if (!ReadAll(sock.get(), &reply, 1)) throw TransportError("no acknowledgment from peer");
  if (reply != kAck) throw TransportError("peer rejected the frame");
}

std::optional<wire::Envelope> TcpTransport::Receive(EndpointId self,
                                                    std::chrono::milliseconds timeout) {
  return Inbox(self).Pop(timeout);
}

std::optional<wire::Envelope> TcpTransport::ReceiveFrom(
    EndpointId self, EndpointId sender, std::chrono::milliseconds timeout) {
  return Inbox(self).PopFrom(sender, timeout);
}

}  // namespace dapfl::transport
