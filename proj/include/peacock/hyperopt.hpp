#pragma once

#include <map>
#include <span>
#include <vector>

#include "peacock/lda.hpp"

namespace peacock {

/// Digamma via upward recurrence to x >= 10 and the asymptotic series.
/// Requires x > 0.
double digamma(double x);

/// Sufficient statistics for learning an asymmetric document-topic prior:
/// doc_len_hist[L] = number of documents of length L;
/// topic_count_hist[k][n] = number of documents in which topic k occurs
/// exactly n > 0 times.
struct AlphaSufficientStats {
  std::map<Count, Count> doc_len_hist;
  std::vector<std::map<Count, Count>> topic_count_hist;

  explicit AlphaSufficientStats(std::size_t num_topics = 0) : topic_count_hist(num_topics) {}

  void add_document(const DocTopicCounts& doc);
  void merge(const AlphaSufficientStats& other);
  std::size_t num_topics() const { return topic_count_hist.size(); }
  Count num_docs() const;
  bool empty() const { return num_docs() == 0; }

  friend bool operator==(const AlphaSufficientStats&, const AlphaSufficientStats&) = default;
};

AlphaSufficientStats collect_stats(std::span<const DocTopicCounts> docs, std::size_t num_topics);

/// Dirichlet-multinomial log evidence of the statistics under alpha, up to
/// the alpha-independent multinomial coefficients.
double dirichlet_multinomial_log_evidence(const AlphaSufficientStats& stats, std::span<const double> alpha);

struct AlphaBounds {
  double lower = 1e-8;
  double upper = 1e4;
};

/// Digamma fixed-point updates
///   alpha_k <- alpha_k * sum_n Omega_kn [psi(n + alpha_k) - psi(alpha_k)]
///                      / sum_L l_L [psi(L + A) - psi(A)],   A = sum_k alpha_k
/// repeated `iters` times, each result clamped to `bounds`. Empty statistics
/// return alpha unchanged; a non-finite intermediate throws ConsistencyError.
std::vector<double> optimize_alpha(const AlphaSufficientStats& stats, std::span<const double> alpha, int iters,
                                   AlphaBounds bounds = {});

}  // namespace peacock
