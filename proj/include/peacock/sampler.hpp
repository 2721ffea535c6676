#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "peacock/lda.hpp"
#include "peacock/rng.hpp"

namespace peacock {

/// Cached bucket masses of the three-way split of the collapsed conditional:
///   s = sum_k alpha_k beta / (Psi_k + V beta)            (smoothing)
///   r = sum_{k: Theta_dk > 0} Theta_dk beta / (Psi_k + V beta)   (document)
///   coefficient_k = (alpha_k + Theta_dk) / (Psi_k + V beta)
/// The word bucket q = sum_{k: Phi_vk > 0} coefficient_k Phi_vk is formed per
/// token from the word's sparse row.
struct BucketState {
  double s = 0.0;
  double r = 0.0;
  std::vector<double> coefficients;
};

/// SparseLDA Gibbs kernel over one WordTopicCounts (a whole model, or a
/// sampling-server shard whose totals are that server's copy of Psi).
///
/// Call order: begin_block() whenever Psi or alpha were replaced, then per
/// document begin_document() ... end_document(), with remove()/draw()/add()
/// (or sample_token()) for each token in between. Not thread-safe; one
/// instance per sampling server.
class SparseSampler {
 public:
  SparseSampler(WordTopicCounts& counts, Hyperparameters hyper, std::size_t vocab_size);

  void set_hyperparameters(Hyperparameters hyper);
  const Hyperparameters& hyperparameters() const { return hyper_; }
  std::size_t num_topics() const { return hyper_.num_topics(); }

  /// Full recomputation of the denominators, s and the Theta = 0 coefficients.
  void begin_block();
  void begin_document(const DocTopicCounts& doc);
  void end_document();
  bool in_document() const { return in_document_; }

  /// Token bookkeeping: adjusts Theta, Phi, Psi and every cache.
  void remove(WordId v, TopicId k);
  void add(WordId v, TopicId k);

  /// Draw for a token already removed from the counts.
  TopicId draw(WordId v, Rng& rng);
  /// remove, draw, add.
  TopicId sample_token(WordId v, TopicId current, Rng& rng);

  /// Resamples every token of one document in order and returns how many
  /// labels changed. Tokens whose `resample` flag is 0 only contribute to
  /// Theta (an empty mask resamples everything).
  std::size_t sweep_document(std::span<const WordId> words, std::span<TopicId> z, Rng& rng,
                             std::span<const std::uint8_t> resample = {});

  // Introspection for tests and invariant checks.
  double smoothing_mass() const { return s_; }
  double document_mass() const { return r_; }
  double word_mass(WordId v) const;
  double total_mass(WordId v) const { return s_ + r_ + word_mass(v); }
  /// Deterministic walk: maps u in [0, total_mass(v)) to a topic.
  TopicId select(WordId v, double u) const;
  /// The consecutive (topic, length) intervals select() walks for word v.
  std::vector<std::pair<TopicId, double>> walk_intervals(WordId v) const;
  BucketState cached_state() const;
  BucketState recomputed_state() const;
  Count theta(TopicId k) const { return theta_[k]; }
  std::span<const TopicId> document_topics() const { return nonzero_; }
  const WordTopicCounts& counts() const { return *counts_; }

 private:
  TopicId select_beyond_word(double u, double q) const;
  void refresh_topic(TopicId k);
  void theta_up(TopicId k);
  void theta_down(TopicId k);

  WordTopicCounts* counts_;
  Hyperparameters hyper_;
  std::size_t vocab_size_;
  double vbeta_ = 0.0;

  std::vector<double> inv_denominator_;
  std::vector<double> coefficient_;
  double s_ = 0.0;
  double r_ = 0.0;

  bool in_document_ = false;
  std::vector<Count> theta_;
  std::vector<TopicId> nonzero_;
  std::vector<std::uint32_t> nonzero_pos_;

  std::vector<double> q_terms_;
};

}  // namespace peacock
