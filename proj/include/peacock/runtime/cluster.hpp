#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "peacock/corpus.hpp"
#include "peacock/driver.hpp"
#include "peacock/log.hpp"
#include "peacock/runtime/checkpoint.hpp"
#include "peacock/runtime/config.hpp"
#include "peacock/runtime/schedule.hpp"

namespace peacock {

struct PhaseTimings {
  double sampling = 0.0;
  double psi_sync = 0.0;
  double alpha = 0.0;
  double aggregation = 0.0;
  double recovery = 0.0;
};

struct IterationReport {
  int iteration = 0;
  Count tokens = 0;   // tokens resampled, over all configurations
  Count changed = 0;  // labels that changed
  std::size_t packages = 0;
  std::size_t retransmissions = 0;
  std::size_t max_in_flight = 0;
  std::size_t psi_syncs = 0;
  bool aggregated = false;
  std::size_t recoveries = 0;
  PhaseTimings seconds;
};

/// One block handed to a sampling server. `step` is the diagonal index with
/// per-diagonal sync and the position in the simulated free-server plan
/// otherwise; `start`/`end` are that plan's virtual times (the step index
/// and step + 1 for diagonals).
struct BlockEvent {
  std::uint32_t config = 0;
  int iteration = 0;
  std::uint32_t segment = 0;
  std::uint32_t step = 0;
  BlockPair block;
  double start = 0.0;
  double end = 0.0;
  Count tokens = 0;
};

/// A Psi synchronization point inside one configuration.
struct BarrierEvent {
  std::uint32_t config = 0;
  int iteration = 0;
  std::uint32_t segment = 0;
  std::uint32_t step = 0;
};

class Cluster;
class AggregationServer;

struct ClusterObserver {
  std::function<void(const BlockEvent&)> on_block;
  std::function<void(const Cluster&, const BarrierEvent&)> on_barrier;
};

/// Make sampling server `sampler` of configuration `config` fail on its
/// `nth_package`-th package during `iteration` (1-based).
struct FaultPlan {
  std::uint32_t config = 0;
  int iteration = 1;
  std::uint32_t sampler = 0;
  std::uint64_t nth_package = 1;
};

/// Coordinator plus C configurations of M sampling servers and M (or M + 1)
/// data servers, and M aggregation servers. Each iteration samples every
/// block of every configuration under the diagonal or free-server schedule
/// with Psi synchronized at each barrier, then re-estimates alpha from all
/// configurations; every sync_period iterations the configurations' Phi
/// changes are summed by the aggregation servers and broadcast back.
///
/// A configuration that fails mid-iteration is rolled back to its snapshot
/// (taken at construction and at every aggregation) and replayed with the
/// recorded alpha history, which reproduces the uninterrupted result.
class Cluster : public TrainingDriver {
 public:
  Cluster(std::vector<Document> docs, Vocabulary vocab, ClusterConfig config, JsonLogger* log = nullptr);
  /// Resume; throws TopologyMismatch when `state` was written for another
  /// topology or corpus.
  Cluster(std::vector<Document> docs, Vocabulary vocab, ClusterConfig config, const ClusterState& state,
          JsonLogger* log = nullptr);
  ~Cluster() override;
  Cluster(const Cluster&) = delete;
  Cluster& operator=(const Cluster&) = delete;

  IterationReport run_iteration();
  void step() override { run_iteration(); }
  int iteration() const override { return iteration_; }
  FrozenModel frozen_model() const override;

  /// Counts rebuilt from every label; equals the sum of the shards.
  TopicModel model() const;
  ClusterState state() const;
  const Topology& topology() const { return topology_; }
  const ClusterConfig& config() const { return config_; }
  const Hyperparameters& hyper() const { return hyper_; }
  const Vocabulary& vocab() const { return vocab_; }
  std::span<const Document> docs() const { return docs_; }
  std::span<const std::uint32_t> col_of_word() const { return col_of_word_; }

  /// Labels in corpus document order.
  std::vector<std::vector<TopicId>> assignments() const;
  const WordTopicCounts& sampler_shard(std::uint32_t config, std::uint32_t m) const;

  /// At a barrier or between iterations: every local Psi equals the column
  /// sums of its configuration's shards and totals the corpus; labels are in
  /// range and cover each document; with C = 1, or right after aggregation,
  /// the shards equal the label histogram exactly. Throws ConsistencyError.
  void verify_conservation() const;

  void inject_fault(const FaultPlan& plan) { fault_ = plan; }
  void set_observer(ClusterObserver observer) { observer_ = std::move(observer); }

 private:
  struct Configuration;

  void partition();
  Configuration& add_config(std::uint32_t index);
  void restore_config(Configuration& cfg, const ConfigState& state);
  void connect(Configuration& cfg);
  ConfigState capture(const Configuration& cfg) const;
  void run_config_iteration(Configuration& cfg, int iteration, IterationReport& report);
  void run_blocks(Configuration& cfg, std::uint32_t segment, std::span<const TimedBlock> blocks, int iteration,
                  std::uint32_t first_step, bool diagonal, IterationReport& report);
  void psi_sync(Configuration& cfg, IterationReport& report);
  void broadcast_alpha(Configuration& cfg, const std::vector<double>& alpha);
  struct BlockWork;
  void execute_block(Configuration& cfg, std::uint32_t segment, BlockPair block, BlockWork& work);
  void aggregate(IterationReport& report);
  void recover(Configuration& cfg, int failed_iteration, IterationReport& report);
  void take_snapshots();

  std::vector<Document> docs_;
  Vocabulary vocab_;
  ClusterConfig config_;
  JsonLogger* log_;
  Topology topology_;
  Hyperparameters hyper_;
  int iteration_ = 0;
  Count total_tokens_ = 0;

  std::vector<std::uint32_t> col_of_word_;
  std::vector<std::vector<std::uint8_t>> owned_;  // per word shard
  std::vector<std::vector<DocId>> row_docs_;      // global rows, C * rows()
  std::vector<std::unique_ptr<Configuration>> configs_;
  std::vector<std::unique_ptr<AggregationServer>> aggregators_;
  std::vector<Count> global_psi_;

  std::vector<ConfigState> snapshots_;
  int snapshot_iteration_ = 0;
  std::vector<std::vector<double>> alpha_history_;  // alpha in effect for iterations after the snapshot
  bool fresh_aggregate_ = true;

  std::optional<FaultPlan> fault_;
  ClusterObserver observer_;
};

}  // namespace peacock
