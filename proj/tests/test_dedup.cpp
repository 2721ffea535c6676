#include <doctest.h>

#include <set>

#include "peacock/dedup.hpp"
#include "support.hpp"

using namespace peacock;

namespace {

std::set<std::set<TopicId>> as_sets(const std::vector<std::vector<TopicId>>& clusters) {
  std::set<std::set<TopicId>> out;
  for (const auto& c : clusters) out.insert({c.begin(), c.end()});
  return out;
}

bool refines(const DedupResult& fine, const DedupResult& coarse) {
  // Topics together in `fine` are together in `coarse`.
  for (const auto& c : fine.clusters)
    for (TopicId k : c)
      if (coarse.remap[k] != coarse.remap[c.front()]) return false;
  return true;
}

}  // namespace

TEST_CASE("l1 distance examples and errors") {
  const std::vector<double> a{0.7, 0.3}, b{0.5, 0.5}, x{1.0, 0.0}, y{0.0, 1.0};
  CHECK(l1_distance(a, b) == doctest::Approx(0.4));
  CHECK(l1_distance(a, a) == 0.0);
  CHECK(l1_distance(x, y) == doctest::Approx(2.0));
  CHECK(l1_distance(a, b) == l1_distance(b, a));
  const std::vector<double> bad{0.7, 0.7};
  CHECK_THROWS_AS(l1_distance(a, bad), std::invalid_argument);
  const std::vector<double> three{0.2, 0.3, 0.5};
  CHECK_THROWS_AS(l1_distance(a, three), std::invalid_argument);
}

TEST_CASE("sparse pairwise distances equal the dense computation") {
  const auto s = testing::random_state(6, 30, 25, 6, 20);
  const double beta = 0.05;
  const auto phi = testing::dense_phi(s.counts, beta, 25);
  const auto dist = topic_distances(s.counts, beta, 25);
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = 0; b < 6; ++b) CHECK(dist[a * 6 + b] == doctest::Approx(testing::dense_l1(phi[a], phi[b])).epsilon(1e-12));
}

TEST_CASE("tiny threshold with distinct topics is the identity partition") {
  const auto c = testing::planted_duplicates(1, {});
  const auto r = cluster_topics(c, Hyperparameters::symmetric(10, 0.1, 0.01), c.num_words(), {1e-9});
  CHECK(r.clusters.size() == 10);
  for (std::size_t k = 0; k < 10; ++k) CHECK(r.remap[k] == k);
  CHECK(r.counts == remap_topics(c, r.remap, 10));
}

TEST_CASE("exact duplicate columns merge for any positive threshold") {
  WordTopicCounts c(4, 3);
  for (auto [v, k, n] : {std::tuple{0u, 0u, 5}, {1u, 0u, 3}, {0u, 2u, 5}, {1u, 2u, 3}, {2u, 1u, 4}, {3u, 1u, 6}}) {
    for (int i = 0; i < n; ++i) c.increment(v, k);
  }
  const Hyperparameters h{{0.1, 0.2, 0.3}, 0.01};
  const auto r = cluster_topics(c, h, 4, {1e-6});
  CHECK(as_sets(r.clusters) == std::set<std::set<TopicId>>{{0, 2}, {1}});
  CHECK(r.counts.num_topics() == 2);
  CHECK(r.counts.token_count() == c.token_count());
  CHECK(r.counts.column_sums() == std::vector<Count>(r.counts.totals().begin(), r.counts.totals().end()));
  CHECK(r.hyper.alpha_sum() == doctest::Approx(h.alpha_sum()));
  CHECK(r.hyper.alpha[r.remap[0]] == doctest::Approx(0.4));
}

TEST_CASE("planted pair merges at 0.5 and nothing else") {
  const auto c = testing::planted_duplicates(2, {{3, 7}});
  const double beta = 0.01;
  const auto phi = testing::dense_phi(c, beta, c.num_words());
  for (std::size_t a = 0; a < 10; ++a) {
    for (std::size_t b = a + 1; b < 10; ++b) {
      const double d = testing::dense_l1(phi[a], phi[b]);
      if (a == 3 && b == 7) {
        CHECK(d <= 0.1);
      } else {
        CHECK(d >= 0.8);
      }
    }
  }
  const auto r = cluster_topics(c, Hyperparameters::symmetric(10, 0.1, beta), c.num_words(), {0.5});
  CHECK(r.clusters.size() == 9);
  CHECK(r.remap[3] == r.remap[7]);
  std::set<TopicId> targets(r.remap.begin(), r.remap.end());
  CHECK(targets.size() == 9);
}

TEST_CASE("partitions refine as the threshold grows") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = testing::random_state(seed, 40, 12, 8, 6);
    const auto h = Hyperparameters::symmetric(8, 0.1, 0.5);
    std::vector<DedupResult> rs;
    for (double tau : {0.1, 0.3, 0.5, 1.0, 1.5}) rs.push_back(cluster_topics(s.counts, h, 12, {tau}));
    for (std::size_t i = 0; i + 1 < rs.size(); ++i) CHECK(refines(rs[i], rs[i + 1]));
  }
}

TEST_CASE("threshold range and remapping labels") {
  const WordTopicCounts c(3, 2);
  const auto h = Hyperparameters::symmetric(2, 0.1, 0.1);
  CHECK_THROWS_AS(cluster_topics(c, h, 3, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(cluster_topics(c, h, 3, {2.0}), std::invalid_argument);

  std::vector<TopicId> z{0, 1, 2, 1};
  const std::vector<TopicId> remap{0, 1, 0};
  remap_assignments(z, remap);
  CHECK(z == std::vector<TopicId>{0, 1, 0, 1});
  std::vector<TopicId> bad{3};
  CHECK_THROWS_AS(remap_assignments(bad, remap), DataError);
}

TEST_CASE("prefilter keeps planted pairs with shared top words") {
  const auto c = testing::planted_duplicates(3, {{1, 4}, {2, 9}});
  DedupOptions o{0.5, 5, 0};
  const auto r = cluster_topics(c, Hyperparameters::symmetric(10, 0.1, 0.01), c.num_words(), o);
  CHECK(as_sets(r.clusters).size() == 8);
  CHECK(r.remap[1] == r.remap[4]);
  CHECK(r.remap[2] == r.remap[9]);
}
