#include "peacock/hyperopt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace peacock {

double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw std::domain_error("digamma: argument must be positive and finite");
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli-number coefficients B_2k / (2k).
  const double series =
      inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12))))));
  return result + std::log(x) - 0.5 * inv - series;
}

namespace {

// psi(a + n) - psi(a); direct sum for small n is more accurate than the
// difference of two large digamma values.
double digamma_shift(double a, Count n) {
  if (n == 0) return 0.0;
  if (n <= 64) {
    double s = 0.0;
    for (Count i = 0; i < n; ++i) s += 1.0 / (a + static_cast<double>(i));
    return s;
  }
  return digamma(a + static_cast<double>(n)) - digamma(a);
}

}  // namespace

void AlphaSufficientStats::add_document(const DocTopicCounts& doc) {
  ++doc_len_hist[doc.total()];
  for (const auto& e : doc.entries()) {
    if (e.topic >= topic_count_hist.size()) throw DataError("document topic outside the statistics' range");
    ++topic_count_hist[e.topic][e.count];
  }
}

void AlphaSufficientStats::merge(const AlphaSufficientStats& other) {
  if (topic_count_hist.size() < other.topic_count_hist.size()) topic_count_hist.resize(other.topic_count_hist.size());
  for (const auto& [len, n] : other.doc_len_hist) doc_len_hist[len] += n;
  for (std::size_t k = 0; k < other.topic_count_hist.size(); ++k)
    for (const auto& [c, n] : other.topic_count_hist[k]) topic_count_hist[k][c] += n;
}

Count AlphaSufficientStats::num_docs() const {
  Count n = 0;
  for (const auto& [len, docs] : doc_len_hist) n += docs;
  return n;
}

AlphaSufficientStats collect_stats(std::span<const DocTopicCounts> docs, std::size_t num_topics) {
  AlphaSufficientStats stats(num_topics);
  for (const auto& d : docs) stats.add_document(d);
  return stats;
}

double dirichlet_multinomial_log_evidence(const AlphaSufficientStats& stats, std::span<const double> alpha) {
  if (alpha.size() != stats.num_topics()) throw std::invalid_argument("log evidence: alpha size mismatch");
  double a_sum = 0.0;
  for (double a : alpha) a_sum += a;
  double ll = 0.0;
  const double lg_sum = std::lgamma(a_sum);
  for (const auto& [len, docs] : stats.doc_len_hist) {
    ll += static_cast<double>(docs) * (lg_sum - std::lgamma(static_cast<double>(len) + a_sum));
  }
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    const double lg_a = std::lgamma(alpha[k]);
    for (const auto& [n, docs] : stats.topic_count_hist[k]) {
      ll += static_cast<double>(docs) * (std::lgamma(static_cast<double>(n) + alpha[k]) - lg_a);
    }
  }
  return ll;
}

std::vector<double> optimize_alpha(const AlphaSufficientStats& stats, std::span<const double> alpha, int iters,
                                   AlphaBounds bounds) {
  std::vector<double> a(alpha.begin(), alpha.end());
  for (double x : a)
    if (!(x > 0.0)) throw std::invalid_argument("optimize_alpha: alpha_k must be > 0");
  if (stats.empty()) return a;
  if (stats.num_topics() != a.size()) throw std::invalid_argument("optimize_alpha: alpha size mismatch");

  for (int it = 0; it < iters; ++it) {
    double a_sum = 0.0;
    for (double x : a) a_sum += x;
    double denom = 0.0;
    for (const auto& [len, docs] : stats.doc_len_hist) denom += static_cast<double>(docs) * digamma_shift(a_sum, len);
    if (denom <= 0.0) return a;  // only empty documents

    std::vector<double> next(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      double numer = 0.0;
      for (const auto& [n, docs] : stats.topic_count_hist[k]) numer += static_cast<double>(docs) * digamma_shift(a[k], n);
      const double updated = a[k] * numer / denom;
      if (!std::isfinite(updated)) throw ConsistencyError("optimize_alpha: non-finite update");
      next[k] = std::clamp(updated, bounds.lower, bounds.upper);
    }
    a = std::move(next);
  }
  return a;
}

}  // namespace peacock
