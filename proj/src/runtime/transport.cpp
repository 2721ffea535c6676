#include "peacock/runtime/transport.hpp"

#include <map>
#include <stdexcept>
#include <string>

namespace peacock {

std::optional<Message> LoopbackChannel::receive(std::chrono::microseconds) {
  if (pending_.empty()) return std::nullopt;
  Message request = std::move(pending_.front());
  pending_.pop_front();
  return server_->handle(request);
}

PipelineStats run_pipeline(std::span<const PackageRequest> packages, Channel& channel, const PipelineOptions& options,
                           const std::function<void(std::size_t, const PackageResponse&)>& on_response) {
  if (options.T == 0) throw std::invalid_argument("run_pipeline: T must be at least 1");
  using Clock = std::chrono::steady_clock;
  struct Outstanding {
    Clock::time_point deadline;
    int attempts;
  };

  PipelineStats stats;
  std::map<std::uint32_t, Outstanding> in_flight;
  std::size_t next = 0, completed = 0;
  auto transmit = [&](std::size_t i, int attempts) {
    if (packages[i].seq != i) throw std::invalid_argument("run_pipeline: package seq must equal its index");
    channel.send(packages[i]);
    in_flight[static_cast<std::uint32_t>(i)] = {Clock::now() + options.timeout, attempts};
    stats.max_in_flight = std::max(stats.max_in_flight, in_flight.size());
  };

  while (completed < packages.size()) {
    while (in_flight.size() < options.T && next < packages.size()) transmit(next++, 1);

    Clock::time_point earliest = Clock::time_point::max();
    for (const auto& [seq, o] : in_flight) earliest = std::min(earliest, o.deadline);
    const auto wait = std::max(std::chrono::microseconds(0),
                               std::chrono::duration_cast<std::chrono::microseconds>(earliest - Clock::now()));
    auto reply = channel.receive(wait);
    if (reply) {
      auto* response = std::get_if<PackageResponse>(&*reply);
      if (!response) throw TransportError("pipeline: unexpected reply type");
      auto it = in_flight.find(response->seq);
      if (it == in_flight.end() || response->block_id != packages[response->seq].block_id) continue;
      in_flight.erase(it);
      ++completed;
      ++stats.packages;
      on_response(response->seq, *response);
      continue;
    }
    const auto now = Clock::now();
    std::vector<std::pair<std::uint32_t, int>> expired;
    for (const auto& [seq, o] : in_flight)
      if (o.deadline <= now) expired.emplace_back(seq, o.attempts);
    for (const auto& [seq, attempts] : expired) {
      in_flight.erase(seq);
      if (attempts > options.max_retransmissions) {
        throw TransportError("pipeline: package " + std::to_string(seq) + " of block " +
                             std::to_string(packages[seq].block_id) + " timed out after retransmission");
      }
      ++stats.retransmissions;
      transmit(seq, attempts + 1);
    }
  }
  return stats;
}

Message call(Channel& channel, Message request, std::chrono::microseconds timeout) {
  channel.send(std::move(request));
  auto reply = channel.receive(timeout);
  if (!reply) throw TransportError("control call timed out");
  return std::move(*reply);
}

std::vector<std::vector<std::size_t>> group_packages(std::span<const std::uint32_t> tokens_per_doc, std::uint32_t L) {
  if (L == 0) throw std::invalid_argument("group_packages: L must be at least 1");
  std::vector<std::vector<std::size_t>> out;
  std::uint64_t filled = L;
  for (std::size_t d = 0; d < tokens_per_doc.size(); ++d) {
    if (filled >= L) {
      out.emplace_back();
      filled = 0;
    }
    out.back().push_back(d);
    filled += tokens_per_doc[d];
  }
  return out;
}

}  // namespace peacock
