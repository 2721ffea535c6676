#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "peacock/corpus.hpp"
#include "peacock/lda.hpp"
#include "peacock/rng.hpp"

namespace peacock {

/// A trained model: word-topic counts, the prior, and the vocabulary that
/// maps text to word ids.
struct TopicModel {
  WordTopicCounts counts;
  Hyperparameters hyper;
  Vocabulary vocab;
};

/// Immutable phi (from the counts) plus alpha, shareable across threads.
class FrozenModel {
 public:
  FrozenModel(WordTopicCounts counts, Hyperparameters hyper, std::size_t vocab_size);
  explicit FrozenModel(const TopicModel& model);

  double phi(WordId v, TopicId k) const {
    return (static_cast<double>(counts_->count(v, k)) + hyper_.beta) * inv_denominator_[k];
  }
  double phi_absent(TopicId k) const { return hyper_.beta * inv_denominator_[k]; }
  double inv_denominator(TopicId k) const { return inv_denominator_[k]; }
  std::vector<double> phi_column(TopicId k) const;

  std::size_t num_topics() const { return hyper_.num_topics(); }
  std::size_t vocab_size() const { return vocab_size_; }
  const Hyperparameters& hyper() const { return hyper_; }
  const WordTopicCounts& counts() const { return *counts_; }

 private:
  std::shared_ptr<const WordTopicCounts> counts_;
  Hyperparameters hyper_;
  std::size_t vocab_size_;
  std::vector<double> inv_denominator_;
};

struct REntry {
  TopicId topic = 0;
  double value = 0.0;
};

/// One retained entry per word: k* = argmax_k phi_vk alpha_k (lowest k on
/// ties) and its value.
class RMatrix {
 public:
  RMatrix() = default;
  explicit RMatrix(std::vector<REntry> entries) : entries_(std::move(entries)) {}
  const REntry& operator[](WordId v) const { return entries_[v]; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<REntry> entries_;
};

/// O(K log K + nnz(Phi)): per word, the best of its non-zero row entries and
/// the best topic absent from its row.
RMatrix build_r_matrix(const FrozenModel& model);

struct PredictOptions {
  int sweeps = 10;
  int trials = 4;
  std::uint64_t seed = 0;
};

struct Prediction {
  std::vector<double> theta;
  std::size_t known_tokens = 0;
  std::size_t unknown_tokens = 0;
  /// Set when no token was known; theta is then the normalized prior.
  bool prior_only = false;
  std::size_t sweeps_run = 0;
  std::uint64_t candidate_evaluations = 0;
  std::size_t max_candidates_per_visit = 0;
};

/// Hooks for instrumentation. `on_visit` sees each token visit with the
/// document counts that exclude the token; `on_sweep` sees z after a sweep.
struct PredictObserver {
  std::function<void(WordId word, std::span<const TopicCount> theta_excl, TopicId chosen, std::size_t candidates)>
      on_visit;
  std::function<void(int trial, int sweep, std::span<const WordId> words, std::span<const TopicId> z)> on_sweep;
};

/// Real-time prediction by coordinate ascent: each token takes
///   argmax( R*_v , max_{k: Theta_dk > 0} phi_vk (Theta_dk + alpha_k) )
/// which equals the dense argmax_k phi_vk (Theta_dk + alpha_k) while only
/// touching the document's non-zero topics. Trials start from the R-matrix
/// topics and differ in token visiting order; their theta are averaged.
class RtLdaPredictor {
 public:
  RtLdaPredictor(const FrozenModel& model, const RMatrix& r) : model_(&model), r_(&r) {}

  /// Word ids >= V are unknown and dropped.
  Prediction predict(std::span<const WordId> tokens, const PredictOptions& options,
                     const PredictObserver* observer = nullptr) const;

 private:
  const FrozenModel* model_;
  const RMatrix* r_;
};

struct SamplingOptions {
  int sweeps = 100;
  int burn_in = 50;
  std::uint64_t seed = 0;
};

/// Collapsed Gibbs inference of one document's theta against a frozen phi,
/// with the SparseLDA bucket split
///   phi_vk (Theta_dk + alpha_k) = alpha_k beta / D_k  +  alpha_k Phi_vk / D_k
///                                 + phi_vk Theta_dk,        D_k = Psi_k + V beta.
/// Theta is averaged over the sweeps after burn-in.
class SamplingPredictor {
 public:
  explicit SamplingPredictor(const FrozenModel& model);

  std::vector<double> infer_theta(std::span<const WordId> tokens, const SamplingOptions& options) const;
  std::vector<double> infer_theta(std::span<const WordId> tokens, const SamplingOptions& options, Rng& rng) const;

 private:
  TopicId draw(WordId v, const std::vector<TopicCount>& theta, Rng& rng) const;

  const FrozenModel* model_;
  std::vector<double> smoothing_cdf_;
};

/// P(v|d) = sum_k phi_vk theta_dk for every word.
std::vector<double> word_likelihoods(std::span<const double> theta, const FrozenModel& model);

/// The `top_n` words by descending P(v|d), ties by word id.
std::vector<std::pair<WordId, double>> extract_features(std::span<const double> theta, const FrozenModel& model,
                                                        std::size_t top_n = 30);

}  // namespace peacock
