#include "peacock/runtime/socket_link.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>

namespace peacock {

namespace {

[[noreturn]] void fail(const char* what) { throw TransportError(std::string(what) + ": " + std::strerror(errno)); }

void write_all(int fd, const std::uint8_t* data, std::size_t size) {
  while (size > 0) {
    const ssize_t n = ::send(fd, data, size, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("socket write");
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

// false on clean end of stream before the first byte.
bool read_exact(int fd, std::uint8_t* data, std::size_t size) {
  std::size_t got = 0;
  while (got < size) {
    const ssize_t n = ::read(fd, data + got, size - got);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("socket read");
    }
    if (n == 0) {
      if (got == 0) return false;
      throw TransportError("socket read: stream ended inside a frame");
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

std::pair<int, int> make_socket_pair() {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) fail("socketpair");
  return {fds[0], fds[1]};
}

SocketChannel::SocketChannel(int fd, LinkModel link) : fd_(fd), link_(link) {
  const int flags = ::fcntl(fd_, F_GETFL);
  if (flags < 0 || ::fcntl(fd_, F_SETFL, flags | O_NONBLOCK) < 0) fail("fcntl");
}

SocketChannel::~SocketChannel() {
  if (fd_ >= 0) ::close(fd_);
}

void SocketChannel::send(Message msg) {
  auto bytes = encode(msg);
  const auto now = Clock::now();
  Clock::time_point due = now;
  if (link_.bytes_per_second > 0.0) {
    const auto start = std::max(now, link_free_);
    link_free_ = start + std::chrono::duration_cast<Clock::duration>(
                             std::chrono::duration<double>(static_cast<double>(bytes.size()) / link_.bytes_per_second));
    due = link_free_;
  }
  due += link_.latency;
  outbound_.push_back({std::move(bytes), due});
  flush_due(now);
}

void SocketChannel::flush_due(Clock::time_point now) {
  while (!outbound_.empty() && outbound_.front().due <= now) {
    auto& front = outbound_.front();
    const ssize_t n = ::send(fd_, front.bytes.data() + written_, front.bytes.size() - written_, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) return;
      fail("socket write");
    }
    written_ += static_cast<std::size_t>(n);
    if (written_ == front.bytes.size()) {
      outbound_.pop_front();
      written_ = 0;
    }
  }
}

std::optional<Message> SocketChannel::take_frame() {
  if (inbound_.size() < kFrameHeaderSize) return std::nullopt;
  const auto h = decode_header(inbound_);
  const std::size_t total = kFrameHeaderSize + h.payload_len;
  if (inbound_.size() < total) return std::nullopt;
  Message m = decode_payload(h.type, std::span(inbound_).subspan(kFrameHeaderSize, h.payload_len));
  inbound_.erase(inbound_.begin(), inbound_.begin() + static_cast<std::ptrdiff_t>(total));
  return m;
}

std::optional<Message> SocketChannel::receive(std::chrono::microseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  std::uint8_t buf[1 << 16];
  for (;;) {
    if (auto m = take_frame()) return m;
    if (peer_closed_) throw TransportError("socket: peer closed the connection");
    const auto now = Clock::now();
    flush_due(now);
    if (now >= deadline) return std::nullopt;

    auto wake = deadline;
    const bool writable_now = !outbound_.empty() && outbound_.front().due <= now;
    if (!outbound_.empty() && !writable_now) wake = std::min(wake, outbound_.front().due);
    pollfd p{fd_, static_cast<short>(POLLIN | (writable_now ? POLLOUT : 0)), 0};
    const auto wait_us = std::chrono::duration_cast<std::chrono::microseconds>(wake - now).count();
    const timespec ts{static_cast<time_t>(wait_us / 1000000), static_cast<long>((wait_us % 1000000) * 1000)};
    const int rc = ::ppoll(&p, 1, &ts, nullptr);
    if (rc < 0) {
      if (errno == EINTR) continue;
      fail("poll");
    }
    if (p.revents & (POLLIN | POLLHUP | POLLERR)) {
      for (;;) {
        const ssize_t n = ::read(fd_, buf, sizeof buf);
        if (n > 0) {
          inbound_.insert(inbound_.end(), buf, buf + n);
          continue;
        }
        if (n == 0) {
          peer_closed_ = true;
        } else if (errno == EINTR) {
          continue;
        } else if (errno != EAGAIN && errno != EWOULDBLOCK) {
          fail("socket read");
        }
        break;
      }
    }
  }
}

void serve_connection(int fd, Endpoint& server) {
  std::vector<std::uint8_t> header(kFrameHeaderSize), payload;
  try {
    for (;;) {
      if (!read_exact(fd, header.data(), header.size())) return;
      const auto h = decode_header(header);
      payload.resize(h.payload_len);
      if (!read_exact(fd, payload.data(), payload.size())) throw TransportError("socket read: missing payload");
      const Message request = decode_payload(h.type, payload);
      const bool stop = std::holds_alternative<Shutdown>(request);
      const auto reply = encode(server.handle(request));
      write_all(fd, reply.data(), reply.size());
      if (stop) return;
    }
  } catch (...) {
    ::shutdown(fd, SHUT_RDWR);
    throw;
  }
}

SocketServerThread::SocketServerThread(int fd, Endpoint& server) : fd_(fd) {
  thread_ = std::thread([this, &server] {
    try {
      serve_connection(fd_, server);
    } catch (...) {
      error_ = std::current_exception();
    }
  });
}

void SocketServerThread::join() {
  if (thread_.joinable()) thread_.join();
  if (error_) std::rethrow_exception(std::exchange(error_, nullptr));
}

SocketServerThread::~SocketServerThread() {
  ::shutdown(fd_, SHUT_RDWR);
  if (thread_.joinable()) thread_.join();
  ::close(fd_);
}

}  // namespace peacock
