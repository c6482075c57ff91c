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

// Delivery of framed envelopes between the server and the clients.
//
// Every Send frames the envelope, and every receiver unframes it, so the
// in-process bus and the TCP transport move identical bytes. Both keep one
// inbox per endpoint in arrival order, which gives FIFO per sender/receiver
// pair.

#ifndef DAPFL_TRANSPORT_H_
#define DAPFL_TRANSPORT_H_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dapfl/wire.h"

namespace dapfl::transport {

using EndpointId = std::uint32_t;
inline constexpr EndpointId kServerEndpoint = 0xFFFFFFFFu;

// Thread-safe FIFO of received envelopes.
class Mailbox {
 public:
  void Push(wire::Envelope e);
  // Oldest envelope, waiting up to `timeout`; nullopt on timeout.
  std::optional<wire::Envelope> Pop(std::chrono::milliseconds timeout);
  // Oldest envelope from `sender`, leaving others queued.
  std::optional<wire::Envelope> PopFrom(EndpointId sender,
                                        std::chrono::milliseconds timeout);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<wire::Envelope> queue_;
};

class Transport {
 public:
  // Observer of every frame sent: (destination, frame bytes).
  using Tap = std::function<void(EndpointId, const Bytes&)>;

  virtual ~Transport() = default;

  // Throws TransportError for an unknown endpoint or a failed delivery.
  virtual void Send(EndpointId to, const wire::Envelope& envelope) = 0;
  virtual std::optional<wire::Envelope> Receive(EndpointId self,
                                                std::chrono::milliseconds timeout) = 0;
  virtual std::optional<wire::Envelope> ReceiveFrom(
      EndpointId self, EndpointId sender, std::chrono::milliseconds timeout) = 0;

  void SetTap(Tap tap) { tap_ = std::move(tap); }

 protected:
  void Observe(EndpointId to, const Bytes& frame) const {
    if (tap_) tap_(to, frame);
  }

 private:
  Tap tap_;
};

// Deterministic in-memory delivery; safe for concurrent senders.
class InProcessBus : public Transport {
 public:
  void Register(EndpointId id);
  bool IsRegistered(EndpointId id) const;

  void Send(EndpointId to, const wire::Envelope& envelope) override;
  std::optional<wire::Envelope> Receive(EndpointId self,
                                        std::chrono::milliseconds timeout) override;
  std::optional<wire::Envelope> ReceiveFrom(EndpointId self, EndpointId sender,
                                            std::chrono::milliseconds timeout) override;

 private:
  Mailbox& Box(EndpointId id) const;

  mutable std::mutex mu_;
  std::map<EndpointId, std::unique_ptr<Mailbox>> boxes_;
};

// One-frame-per-connection delivery over TCP. Each local endpoint owns a
// listening socket; the receiver acknowledges a well-formed frame with 0x06
// and a malformed one with 0x15 before closing.
class TcpTransport : public Transport {
 public:
  TcpTransport() = default;
  ~TcpTransport() override;
  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  // Binds host:port for `self` (port 0 picks an ephemeral port), starts its
  // accept loop and registers it as a peer. Returns the bound port.
  std::uint16_t Listen(EndpointId self, const std::string& host, std::uint16_t port);
  // Address of an endpoint served elsewhere.
  void AddPeer(EndpointId id, const std::string& host, std::uint16_t port);
  void Shutdown();

  void Send(EndpointId to, const wire::Envelope& envelope) override;
  std::optional<wire::Envelope> Receive(EndpointId self,
                                        std::chrono::milliseconds timeout) override;
  std::optional<wire::Envelope> ReceiveFrom(EndpointId self, EndpointId sender,
                                            std::chrono::milliseconds timeout) override;

 private:
  struct Listener {
    int fd = -1;
    Mailbox inbox;
    std::thread thread;
  };
  struct Address {
    std::string host;
    std::uint16_t port = 0;
  };

  void AcceptLoop(Listener* listener);
  Mailbox& Inbox(EndpointId id);

  std::mutex mu_;
  std::atomic<bool> stopping_{false};
  std::map<EndpointId, std::unique_ptr<Listener>> listeners_;
  std::map<EndpointId, Address> peers_;
};

}  // namespace dapfl::transport

#endif  // DAPFL_TRANSPORT_H_
