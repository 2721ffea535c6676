#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "peacock/corpus.hpp"
#include "peacock/lda.hpp"
#include "peacock/predictor.hpp"

namespace peacock {

/// Everything a checkpoint must agree on to be resumable. T and L are
/// excluded: they change how packages travel, not what is computed.
struct Topology {
  std::uint32_t C = 0;
  std::uint32_t M = 0;
  std::uint32_t rows = 0;
  std::uint32_t K = 0;
  std::uint64_t V = 0;
  std::uint64_t D = 0;
  std::uint64_t tokens = 0;
  std::uint32_t granularity = 0;
  std::uint32_t data_segments = 0;
  std::uint32_t sync_period = 0;
  std::uint64_t partition_fingerprint = 0;  // document placement, word placement and corpus content

  std::uint64_t hash() const;
  /// Human-readable list of the fields that differ, empty when equal.
  std::string differences(const Topology& other) const;

  friend bool operator==(const Topology&, const Topology&) = default;
};

struct ConfigState {
  std::vector<WordTopicCounts> shards;                       // per sampling server; totals are its local Psi
  std::vector<std::vector<std::vector<TopicId>>> z;          // per data server, per document
  std::vector<std::string> rng;                              // per sampling server

  friend bool operator==(const ConfigState&, const ConfigState&) = default;
};

/// Quiescent cluster state between iterations.
struct ClusterState {
  Topology topology;
  std::uint32_t iteration = 0;
  std::vector<WordTopicCounts> global_shards;  // aggregation servers, as of the last aggregation
  std::vector<Count> psi;                      // global Psi as last broadcast
  Hyperparameters hyper;
  std::vector<ConfigState> configs;
  Vocabulary vocab;

  friend bool operator==(const ClusterState&, const ClusterState&) = default;
};

/// File bytes: header {magic, version, topology hash, iteration}, tagged
/// sections, trailing CRC-64 over everything before it.
std::vector<std::uint8_t> serialize_state(const ClusterState& state);
/// Throws ChecksumError (naming `source`) on a checksum mismatch or
/// truncation, DataError on malformed contents.
ClusterState deserialize_state(std::span<const std::uint8_t> bytes, const std::string& source);

/// Atomic write through a temporary file and rename.
void save_checkpoint(const ClusterState& state, const std::filesystem::path& path);
ClusterState load_checkpoint(const std::filesystem::path& path);

/// Current word-topic counts: the global rows plus every configuration's
/// change since the last aggregation, with Psi recomputed.
WordTopicCounts merged_counts(const ClusterState& state);
TopicModel model_from_state(const ClusterState& state);

/// Canonical bytes of a training state (counts, labels in document order,
/// hyperparameters) for exact comparison between trainers.
std::vector<std::uint8_t> encode_training_state(const WordTopicCounts& counts,
                                                const std::vector<std::vector<TopicId>>& z,
                                                const Hyperparameters& hyper);

}  // namespace peacock

namespace peacock {

/// Relabels every count and label of a state through `remap` (old topic ->
/// new topic in [0, new_topics)) and installs `hyper`, whose alpha must have
/// new_topics entries. Used to write a de-duplicated model back as a
/// resumable checkpoint.
ClusterState remap_state(const ClusterState& state, std::span<const TopicId> remap, std::size_t new_topics,
                         const Hyperparameters& hyper);

}  // namespace peacock
