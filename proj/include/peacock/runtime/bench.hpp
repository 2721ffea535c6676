#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "peacock/runtime/socket_link.hpp"

namespace peacock {

/// Bytes one token occupies in a PackageRequest.
inline constexpr std::uint32_t kWireTokenBytes = 12;

struct BenchOptions {
  std::uint64_t budget = 65536;  // T * L, bytes
  std::vector<std::uint32_t> sweep{1, 8, 64, 512, 4096};
  std::uint64_t tokens = 60000;
  std::uint32_t vocab = 2000;
  std::uint32_t topics = 50;
  std::uint32_t doc_length = 8;
  LinkModel link{50e6, std::chrono::microseconds(200)};
  std::uint64_t seed = 1;
  std::chrono::milliseconds timeout{30000};
};

struct BenchRow {
  std::uint32_t T = 0;
  std::uint64_t L = 0;  // bytes per package
  double seconds = 0.0;
  std::size_t packages = 0;
};

/// Streams one synthetic block through a sampling server in a child process
/// for each T in the sweep, with L = budget / T, and times the exchange.
/// Requests cross an emulated link (see LinkModel). Throws TransportError
/// when the server process fails.
std::vector<BenchRow> bench_pipeline(const BenchOptions& options);

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace peacock
