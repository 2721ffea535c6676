#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "peacock/types.hpp"

namespace peacock {

struct TopicCount {
  TopicId topic = 0;
  Count count = 0;

  friend bool operator==(const TopicCount&, const TopicCount&) = default;
};

/// Sparse topic histogram, sorted by topic id, never storing zero entries.
/// Used both for a word row of Phi and for a document's Theta.
class SparseCounts {
 public:
  SparseCounts() = default;

  Count get(TopicId k) const;
  void increment(TopicId k, Count by = 1);
  /// Throws ConsistencyError when the entry would go negative.
  void decrement(TopicId k, Count by = 1);
  void clear() { entries_.clear(); }

  std::span<const TopicCount> entries() const { return entries_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  Count total() const;

  /// Replaces the contents; entries must be sorted, unique and non-zero.
  void assign(std::vector<TopicCount> entries);

  friend bool operator==(const SparseCounts&, const SparseCounts&) = default;

 private:
  std::vector<TopicCount> entries_;
};

using DocTopicCounts = SparseCounts;

/// Word-topic counts Phi (one sparse row per word) plus topic totals Psi.
/// For a complete model Psi_k == sum_v Phi_vk. A sampling-server shard holds
/// rows only for its own words and carries the global Psi instead, so the
/// identity holds across shards rather than within one.
class WordTopicCounts {
 public:
  WordTopicCounts() = default;
  WordTopicCounts(std::size_t num_words, std::size_t num_topics);

  std::size_t num_words() const { return rows_.size(); }
  std::size_t num_topics() const { return totals_.size(); }

  const SparseCounts& row(WordId v) const { return rows_.at(v); }
  Count count(WordId v, TopicId k) const { return rows_.at(v).get(k); }
  Count total(TopicId k) const { return totals_.at(k); }
  std::span<const Count> totals() const { return totals_; }

  void increment(WordId v, TopicId k);
  void decrement(WordId v, TopicId k);

  /// Row edits that leave Psi alone (used when rebuilding shards).
  void set_row(WordId v, SparseCounts row) { rows_.at(v) = std::move(row); }
  void set_totals(std::vector<Count> totals);

  /// Psi recomputed from the rows held here.
  std::vector<Count> column_sums() const;
  Count token_count() const;

  friend bool operator==(const WordTopicCounts&, const WordTopicCounts&) = default;

 private:
  std::vector<SparseCounts> rows_;
  std::vector<Count> totals_;
};

/// Dirichlet hyperparameters: per-topic alpha_k and symmetric beta.
struct Hyperparameters {
  std::vector<double> alpha;
  double beta = 0.01;

  static Hyperparameters symmetric(std::size_t num_topics, double alpha, double beta);
  std::size_t num_topics() const { return alpha.size(); }
  double alpha_sum() const;
  /// Throws std::invalid_argument unless every alpha_k > 0 and beta > 0.
  void validate() const;

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

/// theta_dk = (Theta_dk + alpha_k) / (sum_k Theta_dk + sum_k alpha_k)
std::vector<double> estimate_theta(const DocTopicCounts& doc, const Hyperparameters& hyper);

/// phi_vk = (Phi_vk + beta) / (Psi_k + V beta), evaluated lazily from counts.
class PhiEstimator {
 public:
  PhiEstimator(const WordTopicCounts& counts, double beta, std::size_t vocab_size);

  double operator()(WordId v, TopicId k) const;
  /// Value for any word with no count in topic k.
  double absent(TopicId k) const { return beta_ * inv_denominator_[k]; }
  std::vector<double> column(TopicId k) const;
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t num_topics() const { return inv_denominator_.size(); }
  const WordTopicCounts& counts() const { return *counts_; }
  double beta() const { return beta_; }

 private:
  const WordTopicCounts* counts_;
  double beta_;
  std::size_t vocab_size_;
  std::vector<double> inv_denominator_;
};

inline PhiEstimator estimate_phi(const WordTopicCounts& counts, const Hyperparameters& hyper,
                                 std::size_t vocab_size) {
  return PhiEstimator(counts, hyper.beta, vocab_size);
}

/// Dense collapsed conditional over topics for one token, from counts that
/// already exclude the token. O(K); the slow reference for the sparse kernel.
/// Throws ConsistencyError on any negative count.
std::vector<double> gibbs_conditional_oracle(std::span<const std::int64_t> doc_excl,
                                             std::span<const std::int64_t> word_row_excl,
                                             std::span<const std::int64_t> totals_excl,
                                             const Hyperparameters& hyper, std::size_t vocab_size);

/// Same, reading sparse structures for word `v`.
std::vector<double> gibbs_conditional_oracle(WordId v, const DocTopicCounts& doc_excl,
                                             const WordTopicCounts& words_excl, const Hyperparameters& hyper,
                                             std::size_t vocab_size);

/// Histogram of one document's topic labels; throws DataError on label >= K.
DocTopicCounts rebuild_doc_counts(std::span<const TopicId> z, std::size_t num_topics);

}  // namespace peacock
