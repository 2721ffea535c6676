#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "peacock/runtime/transport.hpp"

namespace peacock {

enum class RunMode { deterministic, threaded };
enum class PsiGranularity { per_diagonal, per_segment };

/// Cluster topology and training settings.
struct ClusterConfig {
  std::uint32_t C = 1;  // configurations
  std::uint32_t M = 1;  // sampling servers (word shards) per configuration
  std::uint32_t K = 20;
  std::uint32_t sync_period = 4;  // iterations between cross-configuration aggregations
  PipelineConfig pipeline{};
  double alpha_init = 0.0;  // 0 selects 50 / K
  double beta = 0.01;
  std::uint64_t seed = 1;
  RunMode mode = RunMode::deterministic;
  PsiGranularity granularity = PsiGranularity::per_diagonal;
  std::uint32_t data_segments = 1;  // document slices per data server, sampled one after another
  int alpha_iters = 5;
  bool optimize_alpha = true;
  std::uint32_t timeout_ms = 30000;

  /// Data servers per configuration: M, or M + 1 with per-segment sync.
  std::uint32_t rows() const { return granularity == PsiGranularity::per_segment ? M + 1 : M; }
  double initial_alpha() const { return alpha_init > 0.0 ? alpha_init : 50.0 / K; }
  /// Throws DataError naming the first invalid setting.
  void validate() const;
};

/// Sets one key; throws DataError for an unknown key or a bad value.
void apply_setting(ClusterConfig& config, std::string_view key, std::string_view value);

/// `key=value` lines; blank lines and `#` comments are ignored. Keys: C, M,
/// K, sync_period, T, L, alpha_init, beta, seed (or seeds), mode,
/// granularity, data_segments, alpha_iters, optimize_alpha, timeout_ms.
ClusterConfig parse_config(std::istream& in, ClusterConfig base = {});

std::string format_config(const ClusterConfig& config);

}  // namespace peacock
