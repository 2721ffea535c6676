#pragma once

// Shared fixtures and slow reference implementations for the test suites.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "peacock/corpus.hpp"
#include "peacock/lda.hpp"
#include "peacock/rng.hpp"
#include "peacock/synthetic.hpp"

namespace testing {

using namespace peacock;

struct GibbsState {
  std::size_t V = 0, K = 0;
  std::vector<Document> docs;
  std::vector<std::vector<TopicId>> z;
  WordTopicCounts counts;
};

inline GibbsState random_state(std::uint64_t seed, std::size_t D, std::size_t V, std::size_t K,
                               std::size_t max_len) {
  Rng rng(seed, 11);
  GibbsState s{V, K, {}, {}, WordTopicCounts(V, K)};
  for (std::size_t d = 0; d < D; ++d) {
    Document doc{static_cast<DocId>(d), {}};
    const std::size_t n = 1 + rng.below(max_len);
    std::vector<TopicId> z;
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<WordId>(rng.below(V));
      const auto k = static_cast<TopicId>(rng.below(K));
      doc.tokens.push_back(v);
      z.push_back(k);
      s.counts.increment(v, k);
    }
    s.docs.push_back(std::move(doc));
    s.z.push_back(std::move(z));
  }
  return s;
}

/// Direct transcription of the collapsed conditional, kept apart from the
/// library's own oracle: (Phi_vk + beta) / (Psi_k + V beta) * (Theta_dk + alpha_k).
inline std::vector<double> dense_mass(WordId v, std::span<const TopicId> doc_z_excl, const WordTopicCounts& excl,
                                      const Hyperparameters& h, std::size_t V) {
  const std::size_t K = h.alpha.size();
  std::vector<double> theta(K, 0.0);
  for (TopicId k : doc_z_excl) theta[k] += 1.0;
  std::vector<double> m(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto kk = static_cast<TopicId>(k);
    m[k] = (static_cast<double>(excl.count(v, kk)) + h.beta) /
           (static_cast<double>(excl.total(kk)) + static_cast<double>(V) * h.beta) * (theta[k] + h.alpha[k]);
  }
  return m;
}

inline std::vector<double> normalized(std::vector<double> x) {
  const double s = std::accumulate(x.begin(), x.end(), 0.0);
  for (auto& v : x) v /= s;
  return x;
}

inline Vocabulary numbered_vocab(std::size_t V) {
  std::vector<VocabEntry> e;
  for (std::size_t v = 0; v < V; ++v) e.push_back({"w" + std::to_string(v), static_cast<WordId>(v), 1});
  return Vocabulary(std::move(e));
}

/// Integer conservation checks on a complete model plus its labels.
inline bool conserved(const WordTopicCounts& counts, std::span<const Document> docs,
                      const std::vector<std::vector<TopicId>>& z) {
  const auto sums = counts.column_sums();
  for (std::size_t k = 0; k < counts.num_topics(); ++k)
    if (sums[k] != counts.total(static_cast<TopicId>(k))) return false;
  Count tokens = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    tokens += docs[d].tokens.size();
    if (rebuild_doc_counts(z[d], counts.num_topics()).total() != docs[d].tokens.size()) return false;
  }
  return counts.token_count() == tokens && std::accumulate(sums.begin(), sums.end(), Count{0}) == tokens;
}

/// Dense normalized phi columns (K x V), computed without the library estimator.
inline std::vector<std::vector<double>> dense_phi(const WordTopicCounts& c, double beta, std::size_t V) {
  std::vector<std::vector<double>> phi(c.num_topics(), std::vector<double>(V));
  for (std::size_t k = 0; k < c.num_topics(); ++k) {
    double total = 0.0;
    for (std::size_t v = 0; v < V; ++v) total += static_cast<double>(c.count(static_cast<WordId>(v), static_cast<TopicId>(k)));
    for (std::size_t v = 0; v < V; ++v) {
      phi[k][v] = (static_cast<double>(c.count(static_cast<WordId>(v), static_cast<TopicId>(k))) + beta) /
                  (total + static_cast<double>(V) * beta);
    }
  }
  return phi;
}

inline double dense_l1(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

/// Ten topics on disjoint 20-word supports, except that each pair in
/// `twins` shares a support with counts perturbed by a few percent.
inline WordTopicCounts planted_duplicates(std::uint64_t seed, const std::vector<std::pair<TopicId, TopicId>>& twins,
                                          std::size_t K = 10, std::size_t support = 20) {
  Rng rng(seed, 17);
  const std::size_t V = K * support;
  WordTopicCounts c(V, K);
  std::vector<TopicId> base(K);
  for (std::size_t k = 0; k < K; ++k) base[k] = static_cast<TopicId>(k);
  for (auto [a, b] : twins) base[b] = a;
  std::vector<std::vector<Count>> counts(K, std::vector<Count>(support));
  for (std::size_t k = 0; k < K; ++k)
    for (auto& x : counts[k]) x = 200 + rng.below(800);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < support; ++i) {
      Count n = counts[base[k]][i];
      if (base[k] != k) n = static_cast<Count>(static_cast<double>(n) * (0.98 + 0.04 * rng.uniform()));
      const auto v = static_cast<WordId>(base[k] * support + i);
      for (Count t = 0; t < n; ++t) c.increment(v, static_cast<TopicId>(k));
    }
  }
  return c;
}

}  // namespace testing
