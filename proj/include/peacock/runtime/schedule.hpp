#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "peacock/types.hpp"

namespace peacock {

/// Block (row r, column m): data server r paired with sampling server m.
struct BlockPair {
  std::uint32_t row = 0;
  std::uint32_t col = 0;

  friend bool operator==(const BlockPair&, const BlockPair&) = default;
};

using Segment = std::vector<BlockPair>;

/// Diagonal dig holds {(r, (r + dig) mod M)}; M diagonals in all.
std::vector<Segment> schedule_diagonals(std::uint32_t shards);

/// No two pairs share a row or a column.
bool conflict_free(const Segment& segment);

/// Next data server for a sampling server that just finished: among the
/// candidates (free data servers whose block with this sampling server is
/// still pending) the one with the fewest visits, lowest index on ties.
/// `candidate[r]` marks eligibility. Returns nullopt when none is eligible.
std::optional<std::uint32_t> schedule_free_servers(std::span<const Count> visits,
                                                   std::span<const std::uint8_t> candidate);

struct TimedBlock {
  BlockPair block;
  double start = 0.0;
  double end = 0.0;
};

/// Simulated round of free-server scheduling in which every sampling server
/// visits every data server once. Block (r, m) takes cost[r * cols + m]
/// virtual time units. The sampling server that becomes free first (lowest
/// index on ties) is scheduled next; with no eligible data server it idles
/// until one is released. Result is ordered by start time, then column.
std::vector<TimedBlock> plan_free_server_round(std::span<const Count> cost, std::uint32_t rows, std::uint32_t cols);

}  // namespace peacock
