#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "peacock/runtime/wire.hpp"

namespace peacock {

/// Pipeline sizing: at most T packages in flight, about L resampled tokens
/// per package. T * L is the buffer budget.
struct PipelineConfig {
  std::uint32_t T = 8;
  std::uint32_t L = 512;
};

/// Server side of a link: turns one request into one reply.
class Endpoint {
 public:
  virtual ~Endpoint() = default;
  virtual Message handle(const Message& request) = 0;
};

/// Client side of a link.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual void send(Message msg) = 0;
  /// The next reply, or nullopt when none arrived within `timeout`.
  virtual std::optional<Message> receive(std::chrono::microseconds timeout) = 0;
};

/// In-process deterministic transport: requests are handled in send order,
/// each when its reply is received.
class LoopbackChannel : public Channel {
 public:
  explicit LoopbackChannel(Endpoint& server) : server_(&server) {}
  void send(Message msg) override { pending_.push_back(std::move(msg)); }
  std::optional<Message> receive(std::chrono::microseconds timeout) override;

 private:
  Endpoint* server_;
  std::deque<Message> pending_;
};

struct PipelineOptions {
  std::uint32_t T = 8;
  std::chrono::microseconds timeout = std::chrono::seconds(30);
  int max_retransmissions = 1;
};

struct PipelineStats {
  std::size_t packages = 0;
  std::size_t retransmissions = 0;
  std::size_t max_in_flight = 0;
};

/// Streams packages through a window of at most T unacknowledged requests.
/// Package i must carry seq == i. A request whose reply does not arrive in
/// time frees its slot and is sent again; a second timeout (with the default
/// single retransmission) throws TransportError. Replies to packages no
/// longer outstanding are dropped.
PipelineStats run_pipeline(std::span<const PackageRequest> packages, Channel& channel, const PipelineOptions& options,
                           const std::function<void(std::size_t index, const PackageResponse&)>& on_response);

/// One request/reply exchange for control messages.
Message call(Channel& channel, Message request, std::chrono::microseconds timeout);

/// Groups consecutive documents into packages: a package closes once it
/// holds at least L resampled tokens; documents are never split.
/// `tokens_per_doc` counts each document's tokens in the block.
std::vector<std::vector<std::size_t>> group_packages(std::span<const std::uint32_t> tokens_per_doc, std::uint32_t L);

}  // namespace peacock
