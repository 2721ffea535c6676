#include <doctest.h>

#include "peacock/hyperopt.hpp"
#include "support.hpp"

using namespace peacock;

namespace {

DocTopicCounts doc_counts(std::initializer_list<std::pair<TopicId, Count>> entries) {
  DocTopicCounts d;
  for (auto [k, c] : entries) d.increment(k, c);
  return d;
}

AlphaSufficientStats random_stats(std::uint64_t seed, std::size_t K, std::size_t D) {
  Rng rng(seed, 1);
  AlphaSufficientStats st(K);
  for (std::size_t d = 0; d < D; ++d) {
    DocTopicCounts doc;
    const auto len = 1 + rng.below(30);
    // Skewed topic use so the optimum is asymmetric.
    for (Count i = 0; i < len; ++i) {
      const double u = rng.uniform();
      doc.increment(static_cast<TopicId>(std::min<double>(K - 1, u * u * u * K)));
    }
    st.add_document(doc);
  }
  return st;
}

}  // namespace

TEST_CASE("digamma against high-precision references") {
  const std::pair<double, double> refs[] = {
      {1e-8, -100000000.57721564845},        {0.001, -1000.5755719318103005},
      {0.1, -10.423754940411076795},         {0.5, -1.9635100260214234794},
      {1.0, -0.57721566490153286061},        {1.5, 0.036489973978576520559},
      {2.0, 0.42278433509846713939},         {3.7, 1.1671535393615113859},
      {6.0, 1.7061176684318004727},          {10.0, 2.2517525890667211076},
      {25.5, 3.2189424728839197665},         {100.0, 4.6001618527380874002},
      {1e4, 9.2102903711428494036},          {1e7, 16.118095600958318955},
  };
  for (auto [x, y] : refs) {
    CAPTURE(x);
    CHECK(std::abs(digamma(x) - y) <= 1e-10 * std::abs(y));
  }
  CHECK_THROWS_AS(digamma(0.0), std::domain_error);
  CHECK_THROWS_AS(digamma(-1.0), std::domain_error);
}

TEST_CASE("collect_stats examples") {
  const std::vector<DocTopicCounts> one{doc_counts({{0, 2}})};
  auto st = collect_stats(one, 2);
  CHECK(st.topic_count_hist[0] == std::map<Count, Count>{{2, 1}});
  CHECK(st.doc_len_hist == std::map<Count, Count>{{2, 1}});

  CHECK(collect_stats({}, 3).empty());

  const std::vector<DocTopicCounts> two{doc_counts({{0, 1}, {1, 1}}), doc_counts({{0, 1}})};
  st = collect_stats(two, 2);
  CHECK(st.topic_count_hist[0] == std::map<Count, Count>{{1, 2}});
  CHECK(st.topic_count_hist[1] == std::map<Count, Count>{{1, 1}});
  CHECK(st.doc_len_hist == std::map<Count, Count>{{1, 1}, {2, 1}});
}

TEST_CASE("statistics agree with the counts they came from") {
  const auto s = testing::random_state(3, 40, 10, 5, 20);
  std::vector<DocTopicCounts> docs;
  for (const auto& z : s.z) docs.push_back(rebuild_doc_counts(z, 5));
  const auto st = collect_stats(docs, 5);
  for (std::size_t k = 0; k < 5; ++k) {
    Count docs_with = 0, tokens = 0;
    for (const auto& [n, c] : st.topic_count_hist[k]) docs_with += c, tokens += n * c;
    CHECK(docs_with <= 40);
    CHECK(tokens == s.counts.total(static_cast<TopicId>(k)));
  }
  AlphaSufficientStats a(5), b(5);
  for (std::size_t i = 0; i < docs.size(); ++i) (i % 2 ? a : b).add_document(docs[i]);
  a.merge(b);
  CHECK(a == st);
}

TEST_CASE("empty statistics leave alpha unchanged") {
  const std::vector<double> alpha{0.3, 0.7};
  CHECK(optimize_alpha(AlphaSufficientStats(2), alpha, 5) == alpha);
  CHECK_THROWS_AS(optimize_alpha(AlphaSufficientStats(2), std::vector<double>{0.3, 0.0}, 5), std::invalid_argument);
}

TEST_CASE("exchangeable topics keep a symmetric alpha") {
  AlphaSufficientStats st(3);
  st.add_document(doc_counts({{0, 2}, {1, 2}, {2, 2}}));
  st.add_document(doc_counts({{0, 1}, {1, 1}, {2, 1}}));
  const auto a = optimize_alpha(st, std::vector<double>(3, 0.5), 20);
  CHECK(a[0] == doctest::Approx(a[1]).epsilon(1e-12));
  CHECK(a[1] == doctest::Approx(a[2]).epsilon(1e-12));
}

TEST_CASE("each fixed-point step does not decrease the log evidence") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto st = random_stats(seed, 2 + seed % 6, 50 + 10 * seed);
    std::vector<double> a(st.num_topics(), 0.05 + 0.3 * static_cast<double>(seed % 5));
    double prev = dirichlet_multinomial_log_evidence(st, a);
    for (int it = 0; it < 30; ++it) {
      a = optimize_alpha(st, a, 1);
      for (double x : a) CHECK(x > 0.0);
      const double cur = dirichlet_multinomial_log_evidence(st, a);
      CHECK(cur >= prev - 1e-9 * std::abs(prev));
      prev = cur;
    }
  }
}

TEST_CASE("doubling every count leaves the fixed point unchanged") {
  const auto st = random_stats(8, 4, 80);
  AlphaSufficientStats twice = st;
  twice.merge(st);
  const std::vector<double> a0(4, 0.4);
  const auto a = optimize_alpha(st, a0, 200);
  const auto b = optimize_alpha(twice, a0, 200);
  for (std::size_t k = 0; k < 4; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-9));
}

TEST_CASE("alpha is clamped to its bounds") {
  AlphaSufficientStats st(2);
  for (int i = 0; i < 20; ++i) st.add_document(doc_counts({{0, 5}}));
  const auto a = optimize_alpha(st, std::vector<double>{1.0, 1.0}, 500);
  CHECK(a[1] >= 1e-8);
  CHECK(a[1] < 1e-3);
  CHECK(a[0] <= 1e4);
}
