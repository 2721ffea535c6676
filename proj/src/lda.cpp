#include "peacock/lda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace peacock {

namespace {

auto lower(std::vector<TopicCount>& v, TopicId k) {
  return std::lower_bound(v.begin(), v.end(), k, [](const TopicCount& e, TopicId t) { return e.topic < t; });
}

}  // namespace

Count SparseCounts::get(TopicId k) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), k,
                             [](const TopicCount& e, TopicId t) { return e.topic < t; });
  return (it != entries_.end() && it->topic == k) ? it->count : 0;
}

void SparseCounts::increment(TopicId k, Count by) {
  if (by == 0) return;
  auto it = lower(entries_, k);
  if (it != entries_.end() && it->topic == k) {
    it->count += by;
  } else {
    entries_.insert(it, TopicCount{k, by});
  }
}

void SparseCounts::decrement(TopicId k, Count by) {
  if (by == 0) return;
  auto it = lower(entries_, k);
  if (it == entries_.end() || it->topic != k || it->count < by) {
    throw ConsistencyError("count for topic " + std::to_string(k) + " would become negative");
  }
  it->count -= by;
  if (it->count == 0) entries_.erase(it);
}

Count SparseCounts::total() const {
  Count n = 0;
  for (const auto& e : entries_) n += e.count;
  return n;
}

void SparseCounts::assign(std::vector<TopicCount> entries) {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].count == 0 || (i > 0 && entries[i - 1].topic >= entries[i].topic)) {
      throw DataError("sparse counts must be sorted, unique and non-zero");
    }
  }
  entries_ = std::move(entries);
}

WordTopicCounts::WordTopicCounts(std::size_t num_words, std::size_t num_topics)
    : rows_(num_words), totals_(num_topics, 0) {}

void WordTopicCounts::increment(WordId v, TopicId k) {
  rows_.at(v).increment(k);
  ++totals_.at(k);
}

void WordTopicCounts::decrement(WordId v, TopicId k) {
  if (totals_.at(k) == 0) throw ConsistencyError("topic total would become negative");
  rows_.at(v).decrement(k);
  --totals_[k];
}

void WordTopicCounts::set_totals(std::vector<Count> totals) {
  if (totals.size() != totals_.size()) throw std::invalid_argument("set_totals: wrong topic count");
  totals_ = std::move(totals);
}

std::vector<Count> WordTopicCounts::column_sums() const {
  std::vector<Count> sums(totals_.size(), 0);
  for (const auto& r : rows_)
    for (const auto& e : r.entries()) sums.at(e.topic) += e.count;
  return sums;
}

Count WordTopicCounts::token_count() const {
  Count n = 0;
  for (const auto& r : rows_) n += r.total();
  return n;
}

Hyperparameters Hyperparameters::symmetric(std::size_t num_topics, double alpha, double beta) {
  return Hyperparameters{std::vector<double>(num_topics, alpha), beta};
}

double Hyperparameters::alpha_sum() const { return std::accumulate(alpha.begin(), alpha.end(), 0.0); }

void Hyperparameters::validate() const {
  if (alpha.empty()) throw std::invalid_argument("hyperparameters: need at least one topic");
  for (double a : alpha)
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("hyperparameters: alpha_k must be > 0");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("hyperparameters: beta must be > 0");
}

std::vector<double> estimate_theta(const DocTopicCounts& doc, const Hyperparameters& hyper) {
  const double denom = static_cast<double>(doc.total()) + hyper.alpha_sum();
  std::vector<double> theta(hyper.num_topics());
  for (std::size_t k = 0; k < theta.size(); ++k) theta[k] = hyper.alpha[k] / denom;
  for (const auto& e : doc.entries()) theta.at(e.topic) += static_cast<double>(e.count) / denom;
  return theta;
}

PhiEstimator::PhiEstimator(const WordTopicCounts& counts, double beta, std::size_t vocab_size)
    : counts_(&counts), beta_(beta), vocab_size_(vocab_size), inv_denominator_(counts.num_topics()) {
  const double vbeta = static_cast<double>(vocab_size) * beta;
  for (std::size_t k = 0; k < inv_denominator_.size(); ++k) {
    inv_denominator_[k] = 1.0 / (static_cast<double>(counts.total(static_cast<TopicId>(k))) + vbeta);
  }
}

double PhiEstimator::operator()(WordId v, TopicId k) const {
  return (static_cast<double>(counts_->count(v, k)) + beta_) * inv_denominator_[k];
}

std::vector<double> PhiEstimator::column(TopicId k) const {
  std::vector<double> col(vocab_size_, absent(k));
  for (std::size_t v = 0; v < std::min(vocab_size_, counts_->num_words()); ++v) {
    const Count c = counts_->count(static_cast<WordId>(v), k);
    if (c) col[v] = (static_cast<double>(c) + beta_) * inv_denominator_[k];
  }
  return col;
}

std::vector<double> gibbs_conditional_oracle(std::span<const std::int64_t> doc_excl,
                                             std::span<const std::int64_t> word_row_excl,
                                             std::span<const std::int64_t> totals_excl,
                                             const Hyperparameters& hyper, std::size_t vocab_size) {
  const std::size_t K = hyper.num_topics();
  if (doc_excl.size() != K || word_row_excl.size() != K || totals_excl.size() != K) {
    throw std::invalid_argument("gibbs_conditional_oracle: inputs must have K entries");
  }
  const double vbeta = static_cast<double>(vocab_size) * hyper.beta;
  std::vector<double> p(K);
  double sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    if (doc_excl[k] < 0 || word_row_excl[k] < 0 || totals_excl[k] < 0) {
      throw ConsistencyError("gibbs_conditional_oracle: negative excluded count for topic " + std::to_string(k));
    }
    p[k] = (static_cast<double>(word_row_excl[k]) + hyper.beta) / (static_cast<double>(totals_excl[k]) + vbeta) *
           (static_cast<double>(doc_excl[k]) + hyper.alpha[k]);
    sum += p[k];
  }
  for (auto& x : p) x /= sum;
  return p;
}

std::vector<double> gibbs_conditional_oracle(WordId v, const DocTopicCounts& doc_excl,
                                             const WordTopicCounts& words_excl, const Hyperparameters& hyper,
                                             std::size_t vocab_size) {
  const std::size_t K = hyper.num_topics();
  std::vector<std::int64_t> doc(K, 0), row(K, 0), totals(K, 0);
  for (const auto& e : doc_excl.entries()) doc.at(e.topic) = static_cast<std::int64_t>(e.count);
  for (const auto& e : words_excl.row(v).entries()) row.at(e.topic) = static_cast<std::int64_t>(e.count);
  for (std::size_t k = 0; k < K; ++k) totals[k] = static_cast<std::int64_t>(words_excl.total(static_cast<TopicId>(k)));
  return gibbs_conditional_oracle(doc, row, totals, hyper, vocab_size);
}

DocTopicCounts rebuild_doc_counts(std::span<const TopicId> z, std::size_t num_topics) {
  std::vector<TopicCount> entries;
  // Small documents dominate; a sort of the labels is cheaper than a K-array.
  std::vector<TopicId> labels(z.begin(), z.end());
  std::sort(labels.begin(), labels.end());
  for (TopicId k : labels) {
    if (k >= num_topics) {
      throw DataError("topic label " + std::to_string(k) + " outside [0, " + std::to_string(num_topics) + ")");
    }
    if (!entries.empty() && entries.back().topic == k) {
      ++entries.back().count;
    } else {
      entries.push_back({k, 1});
    }
  }
  DocTopicCounts out;
  out.assign(std::move(entries));
  return out;
}

}  // namespace peacock
