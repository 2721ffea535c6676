#include <doctest.h>

#include <cmath>

#include "peacock/predictor.hpp"
#include "support.hpp"

using namespace peacock;

namespace {

struct RandomModel {
  std::size_t V, K;
  WordTopicCounts counts;
  Hyperparameters hyper;
};

RandomModel random_model(std::uint64_t seed, std::size_t V, std::size_t K, double density) {
  Rng rng(seed, 5);
  RandomModel m{V, K, WordTopicCounts(V, K), Hyperparameters::symmetric(K, 0.1, 0.01)};
  for (auto& a : m.hyper.alpha) a = 0.02 + rng.uniform();
  for (std::size_t v = 0; v < V; ++v)
    for (std::size_t k = 0; k < K; ++k)
      if (rng.uniform() < density)
        for (std::uint64_t n = 1 + rng.below(30); n > 0; --n) m.counts.increment(static_cast<WordId>(v), static_cast<TopicId>(k));
  return m;
}

// Dense value phi_vk (theta_k + alpha_k) from the raw counts.
double dense_value(const RandomModel& m, WordId v, std::size_t k, double theta_k) {
  const auto kk = static_cast<TopicId>(k);
  const double phi = (static_cast<double>(m.counts.count(v, kk)) + m.hyper.beta) /
                     (static_cast<double>(m.counts.total(kk)) + static_cast<double>(m.V) * m.hyper.beta);
  return phi * (theta_k + m.hyper.alpha[k]);
}

TopicId dense_argmax(const RandomModel& m, WordId v, const std::vector<double>& theta) {
  TopicId best = 0;
  double best_value = -1.0;
  for (std::size_t k = 0; k < m.K; ++k) {
    const double val = dense_value(m, v, k, theta[k]);
    if (val > best_value * (1 + 1e-12)) {
      best_value = val;
      best = static_cast<TopicId>(k);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("phi columns are distributions") {
  const auto m = random_model(1, 40, 7, 0.2);
  FrozenModel fm(m.counts, m.hyper, m.V);
  for (TopicId k = 0; k < 7; ++k) {
    const auto col = fm.phi_column(k);
    CHECK(std::accumulate(col.begin(), col.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("R matrix holds the prior-weighted argmax of every word") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = random_model(seed, 60, 2 + seed * 3, seed % 2 ? 0.05 : 0.4);
    FrozenModel fm(m.counts, m.hyper, m.V);
    const auto r = build_r_matrix(fm);
    REQUIRE(r.size() == m.V);
    const std::vector<double> zero(m.K, 0.0);
    for (WordId v = 0; v < m.V; ++v) {
      CHECK(r[v].topic == dense_argmax(m, v, zero));
      CHECK(r[v].value == doctest::Approx(dense_value(m, v, r[v].topic, 0.0)).epsilon(1e-12));
    }
  }
}

TEST_CASE("R matrix breaks ties by the lowest topic") {
  WordTopicCounts c(3, 4);
  FrozenModel fm(c, Hyperparameters::symmetric(4, 0.5, 0.1), 3);
  const auto r = build_r_matrix(fm);
  for (WordId v = 0; v < 3; ++v) CHECK(r[v].topic == 0);
}

TEST_CASE("every visit picks the dense argmax while touching only the document's topics") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const auto m = random_model(100 + seed, 50, 5 + seed * 7, 0.15);
    FrozenModel fm(m.counts, m.hyper, m.V);
    const auto r = build_r_matrix(fm);
    RtLdaPredictor p(fm, r);
    Rng rng(seed);
    std::vector<WordId> doc(3 + rng.below(25));
    for (auto& w : doc) w = static_cast<WordId>(rng.below(m.V));
    std::size_t visits = 0;
    PredictObserver obs;
    obs.on_visit = [&](WordId v, std::span<const TopicCount> theta, TopicId chosen, std::size_t candidates) {
      std::vector<double> dense(m.K, 0.0);
      Count n = 0;
      for (const auto& e : theta) {
        dense[e.topic] = static_cast<double>(e.count);
        n += e.count;
      }
      CHECK(n == doc.size() - 1);
      CHECK(chosen == dense_argmax(m, v, dense));
      CHECK(candidates == theta.size() + 1);
      CHECK(candidates <= std::min(m.K, doc.size() - 1) + 1);
      ++visits;
    };
    const auto pred = p.predict(doc, {10, 3, seed}, &obs);
    CHECK(visits > 0);
    CHECK(std::accumulate(pred.theta.begin(), pred.theta.end(), 0.0) == doctest::Approx(1.0));
    CHECK(pred.known_tokens == doc.size());
  }
}

TEST_CASE("converged labels are a coordinate-wise maximum") {
  const auto m = random_model(7, 30, 12, 0.3);
  FrozenModel fm(m.counts, m.hyper, m.V);
  const auto r = build_r_matrix(fm);
  RtLdaPredictor p(fm, r);
  const std::vector<WordId> doc{1, 2, 3, 4, 5, 1, 2, 9, 9, 20, 21, 22};
  std::vector<TopicId> last;
  PredictObserver obs;
  obs.on_sweep = [&](int trial, int, std::span<const WordId>, std::span<const TopicId> z) {
    if (trial == 0) last.assign(z.begin(), z.end());
  };
  const auto pred = p.predict(doc, {100, 1, 0}, &obs);
  REQUIRE(pred.sweeps_run < 100);
  for (std::size_t i = 0; i < doc.size(); ++i) {
    std::vector<double> theta(m.K, 0.0);
    for (std::size_t j = 0; j < doc.size(); ++j)
      if (j != i) theta[last[j]] += 1.0;
    CHECK(last[i] == dense_argmax(m, doc[i], theta));
  }
}

TEST_CASE("unknown words are dropped and an empty document returns the prior") {
  const auto m = random_model(3, 20, 4, 0.3);
  FrozenModel fm(m.counts, m.hyper, m.V);
  const auto r = build_r_matrix(fm);
  RtLdaPredictor p(fm, r);
  const std::vector<WordId> doc{1, 2, 500, 3};
  const auto pred = p.predict(doc, {});
  CHECK(pred.unknown_tokens == 1);
  CHECK(pred.known_tokens == 3);
  const std::vector<WordId> unknown{100, 200};
  const auto prior = p.predict(unknown, {});
  CHECK(prior.prior_only);
  const double sum = m.hyper.alpha_sum();
  for (std::size_t k = 0; k < m.K; ++k) CHECK(prior.theta[k] == doctest::Approx(m.hyper.alpha[k] / sum));
  CHECK(p.predict(std::vector<WordId>{}, {}).prior_only);
}

TEST_CASE("prediction is deterministic for a seed") {
  const auto m = random_model(5, 40, 9, 0.2);
  FrozenModel fm(m.counts, m.hyper, m.V);
  const auto r = build_r_matrix(fm);
  RtLdaPredictor p(fm, r);
  const std::vector<WordId> doc{3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5};
  CHECK(p.predict(doc, {10, 4, 42}).theta == p.predict(doc, {10, 4, 42}).theta);
}

TEST_CASE("a one-word document samples topics in proportion to phi times alpha") {
  const auto m = random_model(9, 10, 5, 0.5);
  FrozenModel fm(m.counts, m.hyper, m.V);
  SamplingPredictor sp(fm);
  const WordId v = 3;
  std::vector<double> p(m.K);
  for (std::size_t k = 0; k < m.K; ++k) p[k] = dense_value(m, v, k, 0.0);
  p = testing::normalized(p);
  const double denom = 1.0 + m.hyper.alpha_sum();
  const int runs = 4000;
  std::vector<double> mean(m.K, 0.0);
  Rng rng(77);
  for (int i = 0; i < runs; ++i) {
    const auto th = sp.infer_theta(std::vector<WordId>{v}, {1, 0, 0}, rng);
    for (std::size_t k = 0; k < m.K; ++k) mean[k] += th[k] / runs;
  }
  for (std::size_t k = 0; k < m.K; ++k) {
    // theta_k = (1[z = k] + alpha_k) / denom with z drawn from p.
    const double expected = (p[k] + m.hyper.alpha[k]) / denom;
    const double sd = std::sqrt(p[k] * (1 - p[k]) / runs) / denom;
    CHECK(std::abs(mean[k] - expected) <= 3 * sd + 1e-12);
  }
}

TEST_CASE("sampling inference finds the planted topic") {
  // Topic k owns words [10k, 10k + 10).
  const std::size_t K = 4, V = 40;
  WordTopicCounts c(V, K);
  for (WordId v = 0; v < V; ++v)
    for (int n = 0; n < 50; ++n) c.increment(v, v / 10);
  FrozenModel fm(c, Hyperparameters::symmetric(K, 0.1, 0.01), V);
  SamplingPredictor sp(fm);
  const std::vector<WordId> doc{20, 21, 22, 25, 29, 23, 24, 3};
  const auto th = sp.infer_theta(doc, {50, 10, 1});
  CHECK(std::max_element(th.begin(), th.end()) - th.begin() == 2);
  CHECK(th[2] > 0.7);
  const auto r = build_r_matrix(fm);
  const auto pred = RtLdaPredictor(fm, r).predict(doc, {});
  CHECK(std::max_element(pred.theta.begin(), pred.theta.end()) - pred.theta.begin() == 2);
}

TEST_CASE("word likelihoods and features") {
  const auto m = random_model(11, 25, 6, 0.3);
  FrozenModel fm(m.counts, m.hyper, m.V);
  std::vector<double> theta(6, 1.0 / 6);
  const auto lik = word_likelihoods(theta, fm);
  CHECK(std::accumulate(lik.begin(), lik.end(), 0.0) == doctest::Approx(1.0));
  const auto top = extract_features(theta, fm, 5);
  REQUIRE(top.size() == 5);
  for (std::size_t i = 1; i < top.size(); ++i)
    CHECK((top[i - 1].second > top[i].second || (top[i - 1].second == top[i].second && top[i - 1].first < top[i].first)));
  for (const auto& [w, p] : top) {
    CHECK(p == doctest::Approx(lik[w]));
    for (std::size_t v = 0; v < lik.size(); ++v)
      if (lik[v] > top.back().second) CHECK(std::any_of(top.begin(), top.end(), [&](auto& t) { return t.first == v; }));
  }
  CHECK(extract_features(theta, fm, 100).size() == 25);
}
