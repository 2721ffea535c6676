#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "peacock/corpus.hpp"
#include "peacock/driver.hpp"
#include "peacock/predictor.hpp"

namespace peacock {

struct DocumentSplit {
  std::vector<WordId> observed;
  std::vector<WordId> held_out;
};

/// The first round(ratio * n) tokens are observed, clamped so that both
/// halves are non-empty. Requires n >= 2 and ratio in (0, 1).
DocumentSplit split_document(std::span<const WordId> tokens, double observed_ratio);

struct PerplexityOptions {
  double observed_ratio = 0.8;
  SamplingOptions sampling{};
};

struct PerplexityResult {
  double perplexity = 0.0;
  double log_likelihood = 0.0;  // natural log, summed over scored tokens
  Count scored_tokens = 0;
  std::size_t scored_docs = 0;
  std::size_t skipped_docs = 0;
  Count unknown_tokens = 0;

  double mean_log_likelihood() const {
    return scored_tokens ? log_likelihood / static_cast<double>(scored_tokens) : 0.0;
  }
};

/// Infers theta from a document's observed part; `doc_index` identifies the
/// document so implementations can derive per-document random streams.
using ThetaInference = std::function<std::vector<double>(std::span<const WordId> observed, std::size_t doc_index)>;

/// Document completion: theta from the observed part, then
///   perplexity = exp(-sum log sum_k phi_vk theta_dk / N_held).
/// Unknown word ids are dropped; documents left with fewer than two tokens
/// are skipped and counted. No scored token gives a NaN perplexity.
PerplexityResult score_heldout(const FrozenModel& model, std::span<const Document> docs, double observed_ratio,
                               const ThetaInference& infer);

/// score_heldout with collapsed Gibbs theta inference; document i uses the
/// stream Rng(seed).split(i).
PerplexityResult predictive_perplexity(const FrozenModel& model, std::span<const Document> docs,
                                       const PerplexityOptions& options = {});

/// Document-level occurrence and co-occurrence counts over a reference corpus.
class CooccurrenceIndex {
 public:
  CooccurrenceIndex(std::span<const Document> docs, std::size_t vocab_size);

  Count num_docs() const { return num_docs_; }
  Count doc_frequency(WordId v) const { return postings_.at(v).size(); }
  Count pair_frequency(WordId a, WordId b) const;

 private:
  Count num_docs_ = 0;
  std::vector<std::vector<DocId>> postings_;
};

/// log[(D_ab + 1) D / (D_a D_b)]; throws DataError when a word never occurs.
double pmi(const CooccurrenceIndex& index, WordId a, WordId b);

/// Mean PMI over unordered pairs of `words`; throws std::invalid_argument
/// for fewer than two words.
double pmi_coherence(std::span<const WordId> words, const CooccurrenceIndex& index);

/// The n most probable words of topic k, ties by word id.
std::vector<WordId> top_words(const FrozenModel& model, TopicId k, std::size_t n);

/// PMI coherence of every topic's top_n words. Words that never occur in
/// the reference corpus are skipped; a topic left with fewer than two words
/// scores NaN.
std::vector<double> topic_coherence(const FrozenModel& model, const CooccurrenceIndex& index,
                                    std::size_t top_n = 10);

struct CurvePoint {
  int iteration = 0;
  double loglik = 0.0;  // mean held-out log-likelihood per token
};

/// Scores the driver's model at its current iteration, then after every
/// `every_n` further iterations until `total_iterations` is reached (the
/// last iteration is always scored). Every point uses the same inference
/// seed. An empty held-out set yields an empty series without training.
std::vector<CurvePoint> heldout_loglik_curve(TrainingDriver& driver, std::span<const Document> heldout, int every_n,
                                             int total_iterations, const PerplexityOptions& options = {});

void write_loglik_csv(std::ostream& out, std::span<const CurvePoint> curve);
void write_pmi_csv(std::ostream& out, std::span<const double> scores);

}  // namespace peacock
