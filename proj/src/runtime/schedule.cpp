#include "peacock/runtime/schedule.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace peacock {

std::vector<Segment> schedule_diagonals(std::uint32_t shards) {
  if (shards == 0) throw std::invalid_argument("schedule_diagonals: need at least one shard");
  std::vector<Segment> out(shards);
  for (std::uint32_t dig = 0; dig < shards; ++dig) {
    for (std::uint32_t r = 0; r < shards; ++r) out[dig].push_back({r, (r + dig) % shards});
  }
  return out;
}

bool conflict_free(const Segment& segment) {
  for (std::size_t i = 0; i < segment.size(); ++i) {
    for (std::size_t j = i + 1; j < segment.size(); ++j) {
      if (segment[i].row == segment[j].row || segment[i].col == segment[j].col) return false;
    }
  }
  return true;
}

std::optional<std::uint32_t> schedule_free_servers(std::span<const Count> visits,
                                                   std::span<const std::uint8_t> candidate) {
  if (visits.size() != candidate.size()) throw std::invalid_argument("schedule_free_servers: size mismatch");
  std::optional<std::uint32_t> best;
  for (std::uint32_t r = 0; r < visits.size(); ++r) {
    if (!candidate[r]) continue;
    if (!best || visits[r] < visits[*best]) best = r;
  }
  return best;
}

std::vector<TimedBlock> plan_free_server_round(std::span<const Count> cost, std::uint32_t rows, std::uint32_t cols) {
  if (cost.size() != static_cast<std::size_t>(rows) * cols) throw std::invalid_argument("plan_free_server_round: cost size");
  std::vector<double> free_at(cols, 0.0), busy_until(rows, 0.0);
  std::vector<std::uint32_t> remaining(cols, rows);
  std::vector<std::uint8_t> done(static_cast<std::size_t>(rows) * cols, 0), candidate(rows);
  std::vector<Count> visits(rows, 0);
  std::vector<TimedBlock> plan;
  plan.reserve(cost.size());

  while (plan.size() < cost.size()) {
    std::uint32_t m = cols;
    for (std::uint32_t c = 0; c < cols; ++c) {
      if (remaining[c] && (m == cols || free_at[c] < free_at[m])) m = c;
    }
    const double t = free_at[m];
    double next_release = std::numeric_limits<double>::infinity();
    for (std::uint32_t r = 0; r < rows; ++r) {
      const bool pending = !done[static_cast<std::size_t>(r) * cols + m];
      candidate[r] = pending && busy_until[r] <= t;
      if (pending && busy_until[r] > t) next_release = std::min(next_release, busy_until[r]);
    }
    const auto r = schedule_free_servers(visits, candidate);
    if (!r) {
      free_at[m] = next_release;
      continue;
    }
    const std::size_t idx = static_cast<std::size_t>(*r) * cols + m;
    const double end = t + static_cast<double>(cost[idx]);
    plan.push_back({{*r, m}, t, end});
    busy_until[*r] = end;
    free_at[m] = end;
    done[idx] = 1;
    ++visits[*r];
    --remaining[m];
  }
  std::stable_sort(plan.begin(), plan.end(), [](const TimedBlock& a, const TimedBlock& b) {
    return a.start != b.start ? a.start < b.start : a.block.col < b.block.col;
  });
  return plan;
}

}  // namespace peacock
