#include "peacock/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace peacock {

DocumentSplit split_document(std::span<const WordId> tokens, double observed_ratio) {
  if (tokens.size() < 2) throw std::invalid_argument("split_document: need at least two tokens");
  if (!(observed_ratio > 0.0 && observed_ratio < 1.0)) throw std::invalid_argument("split_document: ratio outside (0, 1)");
  const auto n = static_cast<std::ptrdiff_t>(tokens.size());
  const auto cut = std::clamp<std::ptrdiff_t>(std::llround(observed_ratio * static_cast<double>(n)), 1, n - 1);
  DocumentSplit out;
  out.observed.assign(tokens.begin(), tokens.begin() + cut);
  out.held_out.assign(tokens.begin() + cut, tokens.end());
  return out;
}

PerplexityResult score_heldout(const FrozenModel& model, std::span<const Document> docs, double observed_ratio,
                               const ThetaInference& infer) {
  PerplexityResult result;
  std::vector<WordId> known;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    known.clear();
    for (WordId w : docs[d].tokens) {
      if (w < model.vocab_size()) {
        known.push_back(w);
      } else {
        ++result.unknown_tokens;
      }
    }
    if (known.size() < 2) {
      ++result.skipped_docs;
      continue;
    }
    const auto split = split_document(known, observed_ratio);
    const auto theta = infer(split.observed, d);
    for (WordId v : split.held_out) {
      double p = 0.0;
      for (std::size_t k = 0; k < theta.size(); ++k) p += model.phi(v, static_cast<TopicId>(k)) * theta[k];
      result.log_likelihood += std::log(p);
    }
    result.scored_tokens += split.held_out.size();
    ++result.scored_docs;
  }
  result.perplexity = result.scored_tokens
                          ? std::exp(-result.log_likelihood / static_cast<double>(result.scored_tokens))
                          : std::numeric_limits<double>::quiet_NaN();
  return result;
}

PerplexityResult predictive_perplexity(const FrozenModel& model, std::span<const Document> docs,
                                       const PerplexityOptions& options) {
  const SamplingPredictor predictor(model);
  const Rng base(options.sampling.seed, 0x70706c78);
  return score_heldout(model, docs, options.observed_ratio, [&](std::span<const WordId> observed, std::size_t d) {
    Rng rng = base.split(d);
    return predictor.infer_theta(observed, options.sampling, rng);
  });
}

CooccurrenceIndex::CooccurrenceIndex(std::span<const Document> docs, std::size_t vocab_size)
    : num_docs_(docs.size()), postings_(vocab_size) {
  std::vector<WordId> seen;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    seen.assign(docs[d].tokens.begin(), docs[d].tokens.end());
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (WordId v : seen) {
      if (v < vocab_size) postings_[v].push_back(static_cast<DocId>(d));
    }
  }
}

Count CooccurrenceIndex::pair_frequency(WordId a, WordId b) const {
  const auto& pa = postings_.at(a);
  const auto& pb = postings_.at(b);
  Count n = 0;
  std::size_t i = 0, j = 0;
  while (i < pa.size() && j < pb.size()) {
    if (pa[i] == pb[j]) {
      ++n;
      ++i;
      ++j;
    } else if (pa[i] < pb[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return n;
}

double pmi(const CooccurrenceIndex& index, WordId a, WordId b) {
  const double da = static_cast<double>(index.doc_frequency(a));
  const double db = static_cast<double>(index.doc_frequency(b));
  if (da == 0.0 || db == 0.0) throw DataError("pmi: word absent from the reference corpus");
  const double dab = static_cast<double>(index.pair_frequency(a, b));
  return std::log((dab + 1.0) * static_cast<double>(index.num_docs()) / (da * db));
}

double pmi_coherence(std::span<const WordId> words, const CooccurrenceIndex& index) {
  if (words.size() < 2) throw std::invalid_argument("pmi_coherence: need at least two words");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (std::size_t j = i + 1; j < words.size(); ++j) {
      sum += pmi(index, words[i], words[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

std::vector<WordId> top_words(const FrozenModel& model, TopicId k, std::size_t n) {
  // Within one topic phi is monotone in the count, so rank counts.
  std::vector<std::pair<WordId, Count>> present;
  const auto& counts = model.counts();
  for (std::size_t v = 0; v < counts.num_words(); ++v) {
    if (const Count c = counts.count(static_cast<WordId>(v), k)) present.emplace_back(static_cast<WordId>(v), c);
  }
  std::sort(present.begin(), present.end(),
            [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  std::vector<WordId> out;
  for (std::size_t i = 0; i < present.size() && out.size() < n; ++i) out.push_back(present[i].first);
  // Pad with zero-count words in id order.
  std::vector<std::uint8_t> taken(model.vocab_size(), 0);
  for (WordId v : out) taken[v] = 1;
  for (std::size_t v = 0; v < model.vocab_size() && out.size() < n; ++v) {
    if (!taken[v]) out.push_back(static_cast<WordId>(v));
  }
  return out;
}

std::vector<double> topic_coherence(const FrozenModel& model, const CooccurrenceIndex& index, std::size_t top_n) {
  if (top_n < 2) throw std::invalid_argument("topic_coherence: top_n must be at least 2");
  std::vector<double> scores;
  scores.reserve(model.num_topics());
  std::vector<WordId> words;
  for (std::size_t k = 0; k < model.num_topics(); ++k) {
    words.clear();
    for (WordId v : top_words(model, static_cast<TopicId>(k), top_n)) {
      if (index.doc_frequency(v) > 0) words.push_back(v);
    }
    scores.push_back(words.size() < 2 ? std::numeric_limits<double>::quiet_NaN() : pmi_coherence(words, index));
  }
  return scores;
}

std::vector<CurvePoint> heldout_loglik_curve(TrainingDriver& driver, std::span<const Document> heldout, int every_n,
                                             int total_iterations, const PerplexityOptions& options) {
  std::vector<CurvePoint> curve;
  if (heldout.empty()) return curve;
  if (every_n < 1) throw std::invalid_argument("heldout_loglik_curve: every_n must be positive");
  auto score = [&] {
    const auto r = predictive_perplexity(driver.frozen_model(), heldout, options);
    curve.push_back({driver.iteration(), r.mean_log_likelihood()});
  };
  score();
  while (driver.iteration() < total_iterations) {
    driver.step();
    if (driver.iteration() % every_n == 0 || driver.iteration() == total_iterations) score();
  }
  return curve;
}

void write_loglik_csv(std::ostream& out, std::span<const CurvePoint> curve) {
  out << "iteration,loglik\n";
  out.precision(17);
  for (const auto& p : curve) out << p.iteration << ',' << p.loglik << '\n';
}

void write_pmi_csv(std::ostream& out, std::span<const double> scores) {
  out << "topic,pmi\n";
  out.precision(17);
  for (std::size_t k = 0; k < scores.size(); ++k) out << k << ',' << scores[k] << '\n';
}

}  // namespace peacock
