#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <exception>
#include <thread>
#include <utility>
#include <vector>

#include "peacock/runtime/transport.hpp"

namespace peacock {

/// Emulated network for the request direction of a local socket: frames
/// leave at most `bytes_per_second` (0 = unlimited) and arrive `latency`
/// after leaving. A localhost socket on its own has neither property.
struct LinkModel {
  double bytes_per_second = 0.0;
  std::chrono::microseconds latency{0};
};

/// Connected AF_UNIX stream pair (client fd, server fd).
std::pair<int, int> make_socket_pair();

/// Client end of a length-prefixed frame connection. Never blocks in
/// send(); queued frames are written while waiting in receive().
class SocketChannel : public Channel {
 public:
  explicit SocketChannel(int fd, LinkModel link = {});
  ~SocketChannel() override;
  SocketChannel(const SocketChannel&) = delete;
  SocketChannel& operator=(const SocketChannel&) = delete;

  void send(Message msg) override;
  std::optional<Message> receive(std::chrono::microseconds timeout) override;

 private:
  using Clock = std::chrono::steady_clock;
  struct Pending {
    std::vector<std::uint8_t> bytes;
    Clock::time_point due;
  };
  void flush_due(Clock::time_point now);
  std::optional<Message> take_frame();

  int fd_;
  LinkModel link_;
  Clock::time_point link_free_{};
  std::deque<Pending> outbound_;
  std::size_t written_ = 0;  // bytes of outbound_.front() already written
  std::vector<std::uint8_t> inbound_;
  bool peer_closed_ = false;
};

/// Reads request frames from `fd`, answers each through `server`, until
/// Shutdown or end of stream. Returns normally after Shutdown; exceptions
/// from the endpoint propagate after the descriptor is shut down.
void serve_connection(int fd, Endpoint& server);

/// serve_connection on its own thread; owns the descriptor.
class SocketServerThread {
 public:
  SocketServerThread(int fd, Endpoint& server);
  ~SocketServerThread();
  SocketServerThread(const SocketServerThread&) = delete;
  SocketServerThread& operator=(const SocketServerThread&) = delete;

  /// Waits for the thread; rethrows what the endpoint threw, if anything.
  void join();

 private:
  int fd_;
  std::thread thread_;
  std::exception_ptr error_;
};

}  // namespace peacock
