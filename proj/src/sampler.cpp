#include "peacock/sampler.hpp"

#include <string>

namespace peacock {

namespace {

constexpr std::uint32_t kNotPresent = 0xFFFFFFFFu;
// Relative slack tolerated when a walk runs off the end of a bucket because
// of floating-point drift in the cached masses.
constexpr double kDriftTolerance = 1e-9;

}  // namespace

SparseSampler::SparseSampler(WordTopicCounts& counts, Hyperparameters hyper, std::size_t vocab_size)
    : counts_(&counts), hyper_(std::move(hyper)), vocab_size_(vocab_size) {
  hyper_.validate();
  if (hyper_.num_topics() != counts.num_topics()) {
    throw std::invalid_argument("SparseSampler: hyperparameter and count topic numbers differ");
  }
  const std::size_t K = hyper_.num_topics();
  theta_.assign(K, 0);
  nonzero_pos_.assign(K, kNotPresent);
  begin_block();
}

void SparseSampler::set_hyperparameters(Hyperparameters hyper) {
  if (in_document_) throw std::logic_error("set_hyperparameters inside a document");
  hyper.validate();
  if (hyper.num_topics() != hyper_.num_topics()) throw std::invalid_argument("topic count changed");
  hyper_ = std::move(hyper);
  begin_block();
}

void SparseSampler::begin_block() {
  if (in_document_) throw std::logic_error("begin_block inside a document");
  const std::size_t K = hyper_.num_topics();
  vbeta_ = static_cast<double>(vocab_size_) * hyper_.beta;
  inv_denominator_.resize(K);
  coefficient_.resize(K);
  s_ = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    inv_denominator_[k] = 1.0 / (static_cast<double>(counts_->total(static_cast<TopicId>(k))) + vbeta_);
    coefficient_[k] = hyper_.alpha[k] * inv_denominator_[k];
    s_ += hyper_.alpha[k] * hyper_.beta * inv_denominator_[k];
  }
  r_ = 0.0;
}

void SparseSampler::begin_document(const DocTopicCounts& doc) {
  if (in_document_) throw std::logic_error("begin_document inside a document");
  in_document_ = true;
  r_ = 0.0;
  for (const auto& e : doc.entries()) {
    const TopicId k = e.topic;
    if (k >= theta_.size()) throw DataError("document topic outside [0, K)");
    theta_[k] = e.count;
    nonzero_pos_[k] = static_cast<std::uint32_t>(nonzero_.size());
    nonzero_.push_back(k);
    coefficient_[k] = (hyper_.alpha[k] + static_cast<double>(e.count)) * inv_denominator_[k];
    r_ += static_cast<double>(e.count) * hyper_.beta * inv_denominator_[k];
  }
}

void SparseSampler::end_document() {
  for (TopicId k : nonzero_) {
    theta_[k] = 0;
    nonzero_pos_[k] = kNotPresent;
    coefficient_[k] = hyper_.alpha[k] * inv_denominator_[k];
  }
  nonzero_.clear();
  r_ = 0.0;
  in_document_ = false;
}

void SparseSampler::theta_up(TopicId k) {
  if (theta_[k]++ == 0) {
    nonzero_pos_[k] = static_cast<std::uint32_t>(nonzero_.size());
    nonzero_.push_back(k);
  }
}

void SparseSampler::theta_down(TopicId k) {
  if (theta_[k] == 0) throw ConsistencyError("document count for topic " + std::to_string(k) + " would go negative");
  if (--theta_[k] == 0) {
    const std::uint32_t pos = nonzero_pos_[k];
    const TopicId moved = nonzero_.back();
    nonzero_[pos] = moved;
    nonzero_pos_[moved] = pos;
    nonzero_.pop_back();
    nonzero_pos_[k] = kNotPresent;
  }
}

void SparseSampler::refresh_topic(TopicId k) {
  inv_denominator_[k] = 1.0 / (static_cast<double>(counts_->total(k)) + vbeta_);
  coefficient_[k] = (hyper_.alpha[k] + static_cast<double>(theta_[k])) * inv_denominator_[k];
}

void SparseSampler::remove(WordId v, TopicId k) {
  const double ab = hyper_.alpha[k] * hyper_.beta;
  s_ -= ab * inv_denominator_[k];
  r_ -= static_cast<double>(theta_[k]) * hyper_.beta * inv_denominator_[k];
  theta_down(k);
  counts_->decrement(v, k);
  refresh_topic(k);
  s_ += ab * inv_denominator_[k];
  r_ += static_cast<double>(theta_[k]) * hyper_.beta * inv_denominator_[k];
}

void SparseSampler::add(WordId v, TopicId k) {
  const double ab = hyper_.alpha[k] * hyper_.beta;
  s_ -= ab * inv_denominator_[k];
  r_ -= static_cast<double>(theta_[k]) * hyper_.beta * inv_denominator_[k];
  theta_up(k);
  counts_->increment(v, k);
  refresh_topic(k);
  s_ += ab * inv_denominator_[k];
  r_ += static_cast<double>(theta_[k]) * hyper_.beta * inv_denominator_[k];
}

double SparseSampler::word_mass(WordId v) const {
  double q = 0.0;
  for (const auto& e : counts_->row(v).entries()) q += coefficient_[e.topic] * static_cast<double>(e.count);
  return q;
}

TopicId SparseSampler::select(WordId v, double u) const {
  const auto row = counts_->row(v).entries();
  double q = 0.0;
  for (const auto& e : row) q += coefficient_[e.topic] * static_cast<double>(e.count);

  if (u < q) {
    for (const auto& e : row) {
      u -= coefficient_[e.topic] * static_cast<double>(e.count);
      if (u < 0.0) return e.topic;
    }
    return row.back().topic;
  }
  return select_beyond_word(u - q, q);
}

TopicId SparseSampler::select_beyond_word(double u, double q) const {
  if (u < r_ && !nonzero_.empty()) {
    for (TopicId k : nonzero_) {
      u -= static_cast<double>(theta_[k]) * hyper_.beta * inv_denominator_[k];
      if (u < 0.0) return k;
    }
    if (u > kDriftTolerance * (r_ + s_)) {
      throw ConsistencyError("document bucket walk exhausted; stale cache");
    }
    return nonzero_.back();
  }
  u -= r_;
  const std::size_t K = hyper_.num_topics();
  for (std::size_t k = 0; k < K; ++k) {
    u -= hyper_.alpha[k] * hyper_.beta * inv_denominator_[k];
    if (u < 0.0) return static_cast<TopicId>(k);
  }
  if (u > kDriftTolerance * (q + r_ + s_)) {
    throw ConsistencyError("smoothing bucket walk exhausted; stale cache");
  }
  return static_cast<TopicId>(K - 1);
}

std::vector<std::pair<TopicId, double>> SparseSampler::walk_intervals(WordId v) const {
  std::vector<std::pair<TopicId, double>> out;
  for (const auto& e : counts_->row(v).entries()) {
    out.emplace_back(e.topic, coefficient_[e.topic] * static_cast<double>(e.count));
  }
  // The document and smoothing walks start at offsets given by the cached
  // r and s; their last interval absorbs any drift so the lengths add up to
  // exactly the range select() accepts.
  double used = 0.0;
  for (std::size_t i = 0; i < nonzero_.size(); ++i) {
    const TopicId k = nonzero_[i];
    double len = static_cast<double>(theta_[k]) * hyper_.beta * inv_denominator_[k];
    if (i + 1 == nonzero_.size()) len = r_ - used;
    used += len;
    out.emplace_back(k, len);
  }
  used = 0.0;
  const std::size_t K = hyper_.num_topics();
  for (std::size_t k = 0; k < K; ++k) {
    double len = hyper_.alpha[k] * hyper_.beta * inv_denominator_[k];
    if (k + 1 == K) len = s_ - used;
    used += len;
    out.emplace_back(static_cast<TopicId>(k), len);
  }
  return out;
}

TopicId SparseSampler::draw(WordId v, Rng& rng) {
  const auto row = counts_->row(v).entries();
  q_terms_.resize(row.size());
  double q = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    q_terms_[i] = coefficient_[row[i].topic] * static_cast<double>(row[i].count);
    q += q_terms_[i];
  }
  double u = rng.uniform() * (q + r_ + s_);
  if (u < q) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      u -= q_terms_[i];
      if (u < 0.0) return row[i].topic;
    }
    return row.back().topic;
  }
  return select_beyond_word(u - q, q);
}

TopicId SparseSampler::sample_token(WordId v, TopicId current, Rng& rng) {
  remove(v, current);
  const TopicId k = draw(v, rng);
  add(v, k);
  return k;
}

std::size_t SparseSampler::sweep_document(std::span<const WordId> words, std::span<TopicId> z, Rng& rng,
                                          std::span<const std::uint8_t> resample) {
  if (words.size() != z.size()) throw std::invalid_argument("sweep_document: words and z differ in length");
  if (!resample.empty() && resample.size() != words.size()) {
    throw std::invalid_argument("sweep_document: resample mask length mismatch");
  }
  if (words.empty()) return 0;
  begin_document(rebuild_doc_counts(z, num_topics()));
  std::size_t changed = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!resample.empty() && !resample[i]) continue;
    const TopicId k = sample_token(words[i], z[i], rng);
    if (k != z[i]) {
      z[i] = k;
      ++changed;
    }
  }
  end_document();
  return changed;
}

BucketState SparseSampler::cached_state() const { return BucketState{s_, r_, coefficient_}; }

BucketState SparseSampler::recomputed_state() const {
  const std::size_t K = hyper_.num_topics();
  BucketState st;
  st.coefficients.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double inv = 1.0 / (static_cast<double>(counts_->total(static_cast<TopicId>(k))) + vbeta_);
    st.s += hyper_.alpha[k] * hyper_.beta * inv;
    st.r += static_cast<double>(theta_[k]) * hyper_.beta * inv;
    st.coefficients[k] = (hyper_.alpha[k] + static_cast<double>(theta_[k])) * inv;
  }
  return st;
}

}  // namespace peacock
