#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "peacock/corpus.hpp"
#include "peacock/driver.hpp"
#include "peacock/runtime/config.hpp"
#include "peacock/sampler.hpp"

namespace peacock {

/// Initial labels, uniform over K, drawn in corpus order from one stream.
std::vector<std::vector<TopicId>> initial_assignments(std::span<const Document> docs, std::uint32_t K,
                                                      std::uint64_t seed);

/// Random stream of sampling server m in configuration c.
Rng sampler_stream(std::uint64_t seed, std::uint32_t config, std::uint32_t m);

/// Single SparseLDA sampler over the whole corpus. Uses the same seeds,
/// initial labels and document order as a C = 1, M = 1 cluster, and the same
/// alpha re-estimation after each iteration.
class SequentialTrainer : public TrainingDriver {
 public:
  SequentialTrainer(std::vector<Document> docs, Vocabulary vocab, ClusterConfig config);

  /// Returns the number of labels that changed.
  Count run_iteration();
  void step() override { run_iteration(); }
  int iteration() const override { return iteration_; }
  FrozenModel frozen_model() const override;

  const WordTopicCounts& counts() const { return *counts_; }
  const std::vector<std::vector<TopicId>>& assignments() const { return z_; }
  const Hyperparameters& hyper() const { return hyper_; }
  const Rng& rng() const { return rng_; }
  std::span<const DocId> order() const { return order_; }

 private:
  std::vector<Document> docs_;
  Vocabulary vocab_;
  ClusterConfig config_;
  Hyperparameters hyper_;
  std::unique_ptr<WordTopicCounts> counts_;
  std::unique_ptr<SparseSampler> sampler_;
  std::vector<std::vector<TopicId>> z_;
  std::vector<DocId> order_;
  Rng rng_;
  int iteration_ = 0;
};

}  // namespace peacock
