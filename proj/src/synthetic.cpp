#include "peacock/synthetic.hpp"

#include <algorithm>
#include <random>
#include <string>

namespace peacock {

std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng) {
  std::vector<double> x(alpha.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    std::gamma_distribution<double> g(alpha[k], 1.0);
    x[k] = g(rng);
    sum += x[k];
  }
  if (sum > 0.0) {
    for (auto& v : x) v /= sum;
    return x;
  }
  // Every gamma draw underflowed; put all mass on one coordinate drawn by alpha.
  std::discrete_distribution<std::size_t> pick(alpha.begin(), alpha.end());
  std::fill(x.begin(), x.end(), 0.0);
  x[pick(rng)] = 1.0;
  return x;
}

SyntheticCorpus generate_corpus(const SyntheticSpec& spec) {
  const std::size_t K = spec.topics, V = spec.vocab;
  std::vector<double> alpha = spec.alpha.empty() ? std::vector<double>(K, 0.1) : spec.alpha;
  if (alpha.size() != K) throw std::invalid_argument("generate_corpus: alpha size differs from topic count");

  Rng rng(spec.seed, 0x73796e74);
  SyntheticCorpus out;
  const std::vector<double> beta(V, spec.beta);
  out.phi.reserve(K);
  for (std::size_t k = 0; k < K; ++k) out.phi.push_back(sample_dirichlet(beta, rng));

  std::vector<std::discrete_distribution<WordId>> word_of_topic;
  word_of_topic.reserve(K);
  for (const auto& col : out.phi) word_of_topic.emplace_back(col.begin(), col.end());

  std::poisson_distribution<std::size_t> length(spec.mean_length);
  std::vector<Count> freq(V, 0);
  out.docs.reserve(spec.docs);
  out.theta.reserve(spec.docs);
  for (std::size_t d = 0; d < spec.docs; ++d) {
    auto theta = sample_dirichlet(alpha, rng);
    std::discrete_distribution<TopicId> topic(theta.begin(), theta.end());
    Document doc;
    doc.id = static_cast<DocId>(d);
    const std::size_t n = std::max(spec.min_length, length(rng));
    doc.tokens.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const WordId w = word_of_topic[topic(rng)](rng);
      doc.tokens.push_back(w);
      ++freq[w];
    }
    out.docs.push_back(std::move(doc));
    out.theta.push_back(std::move(theta));
  }

  std::vector<VocabEntry> entries;
  entries.reserve(V);
  for (std::size_t v = 0; v < V; ++v) entries.push_back({"w" + std::to_string(v), static_cast<WordId>(v), freq[v]});
  out.vocab = Vocabulary(std::move(entries));
  return out;
}

}  // namespace peacock
