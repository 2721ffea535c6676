#include "peacock/predictor.hpp"

#include <algorithm>
#include <numeric>

namespace peacock {

FrozenModel::FrozenModel(WordTopicCounts counts, Hyperparameters hyper, std::size_t vocab_size)
    : counts_(std::make_shared<const WordTopicCounts>(std::move(counts))),
      hyper_(std::move(hyper)),
      vocab_size_(vocab_size) {
  hyper_.validate();
  if (hyper_.num_topics() != counts_->num_topics()) throw DataError("model: alpha and counts disagree on K");
  if (counts_->num_words() > vocab_size_) throw DataError("model: counts cover more words than the vocabulary");
  const double vbeta = static_cast<double>(vocab_size_) * hyper_.beta;
  inv_denominator_.resize(hyper_.num_topics());
  for (std::size_t k = 0; k < inv_denominator_.size(); ++k) {
    inv_denominator_[k] = 1.0 / (static_cast<double>(counts_->total(static_cast<TopicId>(k))) + vbeta);
  }
}

FrozenModel::FrozenModel(const TopicModel& model) : FrozenModel(model.counts, model.hyper, model.vocab.size()) {}

std::vector<double> FrozenModel::phi_column(TopicId k) const {
  std::vector<double> col(vocab_size_, phi_absent(k));
  for (std::size_t v = 0; v < counts_->num_words(); ++v) {
    if (const Count c = counts_->count(static_cast<WordId>(v), k)) {
      col[v] = (static_cast<double>(c) + hyper_.beta) * inv_denominator_[k];
    }
  }
  return col;
}

namespace {

bool better(double value, TopicId topic, double best_value, TopicId best_topic) {
  return value > best_value || (value == best_value && topic < best_topic);
}

void theta_inc(std::vector<TopicCount>& theta, TopicId k) {
  for (auto& e : theta) {
    if (e.topic == k) {
      ++e.count;
      return;
    }
  }
  theta.push_back({k, 1});
}

void theta_dec(std::vector<TopicCount>& theta, TopicId k) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (theta[i].topic == k) {
      if (--theta[i].count == 0) {
        theta[i] = theta.back();
        theta.pop_back();
      }
      return;
    }
  }
  throw ConsistencyError("prediction: removing a topic the document does not hold");
}

std::vector<double> theta_from_counts(const std::vector<TopicCount>& theta, const Hyperparameters& hyper,
                                      std::size_t length) {
  const double denom = static_cast<double>(length) + hyper.alpha_sum();
  std::vector<double> out(hyper.num_topics());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = hyper.alpha[k] / denom;
  for (const auto& e : theta) out[e.topic] += static_cast<double>(e.count) / denom;
  return out;
}

std::vector<double> normalized_prior(const Hyperparameters& hyper) {
  const double sum = hyper.alpha_sum();
  std::vector<double> out(hyper.alpha);
  for (auto& x : out) x /= sum;
  return out;
}

}  // namespace

RMatrix build_r_matrix(const FrozenModel& model) {
  const std::size_t K = model.num_topics();
  const auto& alpha = model.hyper().alpha;
  const double beta = model.hyper().beta;

  // Value of a word with no count in topic k, computed exactly as phi * alpha.
  std::vector<double> absent(K);
  for (std::size_t k = 0; k < K; ++k) absent[k] = ((0.0 + beta) * model.inv_denominator(static_cast<TopicId>(k))) * alpha[k];
  std::vector<TopicId> by_absent(K);
  std::iota(by_absent.begin(), by_absent.end(), 0);
  std::sort(by_absent.begin(), by_absent.end(), [&](TopicId a, TopicId b) {
    return absent[a] != absent[b] ? absent[a] > absent[b] : a < b;
  });

  std::vector<REntry> entries(model.vocab_size());
  const auto& counts = model.counts();
  for (std::size_t v = 0; v < entries.size(); ++v) {
    const auto row = v < counts.num_words() ? counts.row(static_cast<WordId>(v)).entries() : std::span<const TopicCount>{};
    REntry best{0, -1.0};
    bool have = false;
    for (const auto& e : row) {
      const double val = model.phi(static_cast<WordId>(v), e.topic) * alpha[e.topic];
      if (!have || better(val, e.topic, best.value, best.topic)) {
        best = {e.topic, val};
        have = true;
      }
    }
    // Highest-valued topic outside the row; row is sorted by topic.
    for (TopicId k : by_absent) {
      const bool in_row = std::binary_search(row.begin(), row.end(), TopicCount{k, 0},
                                             [](const TopicCount& a, const TopicCount& b) { return a.topic < b.topic; });
      if (in_row) continue;
      if (!have || better(absent[k], k, best.value, best.topic)) best = {k, absent[k]};
      break;
    }
    entries[v] = best;
  }
  return RMatrix(std::move(entries));
}

Prediction RtLdaPredictor::predict(std::span<const WordId> tokens, const PredictOptions& options,
                                   const PredictObserver* observer) const {
  const FrozenModel& model = *model_;
  const auto& alpha = model.hyper().alpha;
  Prediction out;

  std::vector<WordId> words;
  words.reserve(tokens.size());
  for (WordId t : tokens) {
    if (t < model.vocab_size()) {
      words.push_back(t);
    } else {
      ++out.unknown_tokens;
    }
  }
  out.known_tokens = words.size();
  if (words.empty()) {
    out.theta = normalized_prior(model.hyper());
    out.prior_only = true;
    return out;
  }

  const int trials = std::max(1, options.trials);
  const int sweeps = std::max(0, options.sweeps);
  out.theta.assign(model.num_topics(), 0.0);
  const Rng base(options.seed, 0x72746c6461ull);

  std::vector<std::size_t> order(words.size());
  std::vector<TopicId> z(words.size());
  std::vector<TopicCount> theta;
  for (int t = 0; t < trials; ++t) {
    std::iota(order.begin(), order.end(), 0);
    if (t > 0) {
      Rng rng = base.split(static_cast<std::uint64_t>(t));
      std::shuffle(order.begin(), order.end(), rng);
    }
    theta.clear();
    for (std::size_t i = 0; i < words.size(); ++i) {
      z[i] = (*r_)[words[i]].topic;
      theta_inc(theta, z[i]);
    }

    std::size_t run = 0;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
      std::size_t changed = 0;
      for (std::size_t i : order) {
        const WordId v = words[i];
        theta_dec(theta, z[i]);
        const REntry& rv = (*r_)[v];
        TopicId best_topic = rv.topic;
        double best_value = rv.value;
        std::size_t candidates = 1;
        for (const auto& e : theta) {
          const double val = model.phi(v, e.topic) * (static_cast<double>(e.count) + alpha[e.topic]);
          ++candidates;
          if (better(val, e.topic, best_value, best_topic)) {
            best_value = val;
            best_topic = e.topic;
          }
        }
        out.candidate_evaluations += candidates;
        out.max_candidates_per_visit = std::max(out.max_candidates_per_visit, candidates);
        if (observer && observer->on_visit) observer->on_visit(v, theta, best_topic, candidates);
        if (best_topic != z[i]) ++changed;
        z[i] = best_topic;
        theta_inc(theta, best_topic);
      }
      ++run;
      if (observer && observer->on_sweep) observer->on_sweep(t, sweep, words, z);
      if (changed == 0) break;
    }
    out.sweeps_run = std::max(out.sweeps_run, run);

    const auto th = theta_from_counts(theta, model.hyper(), words.size());
    for (std::size_t k = 0; k < th.size(); ++k) out.theta[k] += th[k];
  }
  for (auto& x : out.theta) x /= trials;
  return out;
}

SamplingPredictor::SamplingPredictor(const FrozenModel& model) : model_(&model) {
  const std::size_t K = model.num_topics();
  smoothing_cdf_.resize(K);
  double acc = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    acc += model.hyper().alpha[k] * model.phi_absent(static_cast<TopicId>(k));
    smoothing_cdf_[k] = acc;
  }
}

TopicId SamplingPredictor::draw(WordId v, const std::vector<TopicCount>& theta, Rng& rng) const {
  const FrozenModel& model = *model_;
  const auto& alpha = model.hyper().alpha;
  double r = 0.0;
  for (const auto& e : theta) r += model.phi(v, e.topic) * static_cast<double>(e.count);
  const auto row = v < model.counts().num_words() ? model.counts().row(v).entries() : std::span<const TopicCount>{};
  double q = 0.0;
  for (const auto& e : row) q += static_cast<double>(e.count) * alpha[e.topic] * model.inv_denominator(e.topic);
  const double s = smoothing_cdf_.back();

  double u = rng.uniform() * (r + q + s);
  if (u < r) {
    for (const auto& e : theta) {
      u -= model.phi(v, e.topic) * static_cast<double>(e.count);
      if (u < 0.0) return e.topic;
    }
    return theta.back().topic;
  }
  u -= r;
  if (u < q) {
    for (const auto& e : row) {
      u -= static_cast<double>(e.count) * alpha[e.topic] * model.inv_denominator(e.topic);
      if (u < 0.0) return e.topic;
    }
    return row.back().topic;
  }
  u -= q;
  auto it = std::upper_bound(smoothing_cdf_.begin(), smoothing_cdf_.end(), u);
  if (it == smoothing_cdf_.end()) --it;
  return static_cast<TopicId>(it - smoothing_cdf_.begin());
}

std::vector<double> SamplingPredictor::infer_theta(std::span<const WordId> tokens, const SamplingOptions& options) const {
  Rng rng(options.seed, 0x73706c6461ull);
  return infer_theta(tokens, options, rng);
}

std::vector<double> SamplingPredictor::infer_theta(std::span<const WordId> tokens, const SamplingOptions& options,
                                                   Rng& rng) const {
  const FrozenModel& model = *model_;
  std::vector<WordId> words;
  for (WordId t : tokens)
    if (t < model.vocab_size()) words.push_back(t);
  if (words.empty()) return normalized_prior(model.hyper());

  std::vector<TopicId> z(words.size());
  std::vector<TopicCount> theta;
  for (std::size_t i = 0; i < words.size(); ++i) {
    z[i] = draw(words[i], theta, rng);
    theta_inc(theta, z[i]);
  }

  std::vector<double> sum(model.num_topics(), 0.0);
  int samples = 0;
  for (int sweep = 0; sweep < options.sweeps; ++sweep) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      theta_dec(theta, z[i]);
      z[i] = draw(words[i], theta, rng);
      theta_inc(theta, z[i]);
    }
    if (sweep >= options.burn_in) {
      const auto th = theta_from_counts(theta, model.hyper(), words.size());
      for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += th[k];
      ++samples;
    }
  }
  if (samples == 0) return theta_from_counts(theta, model.hyper(), words.size());
  for (auto& x : sum) x /= samples;
  return sum;
}

std::vector<double> word_likelihoods(std::span<const double> theta, const FrozenModel& model) {
  if (theta.size() != model.num_topics()) throw std::invalid_argument("word_likelihoods: theta has wrong size");
  double base = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) base += theta[k] * model.phi_absent(static_cast<TopicId>(k));
  std::vector<double> p(model.vocab_size(), base);
  const auto& counts = model.counts();
  for (std::size_t v = 0; v < counts.num_words(); ++v) {
    for (const auto& e : counts.row(static_cast<WordId>(v)).entries()) {
      p[v] += theta[e.topic] * static_cast<double>(e.count) * model.inv_denominator(e.topic);
    }
  }
  return p;
}

std::vector<std::pair<WordId, double>> extract_features(std::span<const double> theta, const FrozenModel& model,
                                                        std::size_t top_n) {
  const auto p = word_likelihoods(theta, model);
  std::vector<WordId> ids(p.size());
  std::iota(ids.begin(), ids.end(), 0);
  const std::size_t keep = std::min(top_n, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(keep), ids.end(),
                    [&](WordId a, WordId b) { return p[a] != p[b] ? p[a] > p[b] : a < b; });
  std::vector<std::pair<WordId, double>> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.emplace_back(ids[i], p[ids[i]]);
  return out;
}

}  // namespace peacock
