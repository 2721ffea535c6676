#include "peacock/runtime/sequential.hpp"

#include "peacock/hyperopt.hpp"

namespace peacock {

std::vector<std::vector<TopicId>> initial_assignments(std::span<const Document> docs, std::uint32_t K,
                                                      std::uint64_t seed) {
  Rng rng(seed, 0x7a696e69);
  std::vector<std::vector<TopicId>> z(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    z[d].resize(docs[d].tokens.size());
    for (auto& k : z[d]) k = static_cast<TopicId>(rng.below(K));
  }
  return z;
}

Rng sampler_stream(std::uint64_t seed, std::uint32_t config, std::uint32_t m) {
  return Rng(seed, 0x73616d70).split((static_cast<std::uint64_t>(config) << 32) | m);
}

SequentialTrainer::SequentialTrainer(std::vector<Document> docs, Vocabulary vocab, ClusterConfig config)
    : docs_(std::move(docs)),
      vocab_(std::move(vocab)),
      config_(config),
      hyper_(Hyperparameters::symmetric(config.K, config.initial_alpha(), config.beta)),
      rng_(sampler_stream(config.seed, 0, 0)) {
  config_.validate();
  const auto grid = shuffle_and_partition(docs_, vocab_, 1, 1, config_.seed);
  order_ = grid.row_docs[0];
  z_ = initial_assignments(docs_, config_.K, config_.seed);
  counts_ = std::make_unique<WordTopicCounts>(vocab_.size(), config_.K);
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    for (std::size_t i = 0; i < z_[d].size(); ++i) counts_->increment(docs_[d].tokens[i], z_[d][i]);
  }
  sampler_ = std::make_unique<SparseSampler>(*counts_, hyper_, vocab_.size());
}

Count SequentialTrainer::run_iteration() {
  Count changed = 0;
  sampler_->begin_block();
  for (DocId d : order_) changed += sampler_->sweep_document(docs_[d].tokens, z_[d], rng_);
  if (config_.optimize_alpha) {
    AlphaSufficientStats stats(config_.K);
    for (const auto& z : z_) stats.add_document(rebuild_doc_counts(z, config_.K));
    hyper_.alpha = optimize_alpha(stats, hyper_.alpha, config_.alpha_iters);
    sampler_->set_hyperparameters(hyper_);
  }
  ++iteration_;
  return changed;
}

FrozenModel SequentialTrainer::frozen_model() const { return FrozenModel(*counts_, hyper_, vocab_.size()); }

}  // namespace peacock
