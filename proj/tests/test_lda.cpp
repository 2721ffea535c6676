#include <doctest.h>

#include "peacock/lda.hpp"
#include "support.hpp"

using namespace peacock;

namespace {

DocTopicCounts doc_counts(std::initializer_list<std::pair<TopicId, Count>> entries) {
  DocTopicCounts d;
  for (auto [k, c] : entries) d.increment(k, c);
  return d;
}

}  // namespace

TEST_CASE("estimate_theta examples") {
  auto t = estimate_theta(doc_counts({{0, 2}, {1, 1}}), Hyperparameters::symmetric(3, 0.5, 0.1));
  CHECK(t[0] == doctest::Approx(2.5 / 4.5).epsilon(1e-15));
  CHECK(t[1] == doctest::Approx(1.5 / 4.5).epsilon(1e-15));
  CHECK(t[2] == doctest::Approx(0.5 / 4.5).epsilon(1e-15));

  t = estimate_theta({}, Hyperparameters::symmetric(4, 0.3, 0.1));
  for (double x : t) CHECK(x == doctest::Approx(0.25));

  t = estimate_theta(doc_counts({{0, 1}, {1, 1}}), Hyperparameters{{1.0, 3.0}, 0.1});
  CHECK(t[0] == doctest::Approx(2.0 / 6.0));
  CHECK(t[1] == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("estimate_theta sums to one") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Hyperparameters h;
    h.beta = 0.1;
    DocTopicCounts d;
    for (int k = 0; k < 7; ++k) {
      h.alpha.push_back(0.01 + rng.uniform() * 3);
      if (rng.below(2)) d.increment(static_cast<TopicId>(k), 1 + rng.below(9));
    }
    const auto t = estimate_theta(d, h);
    double s = 0.0;
    for (double x : t) {
      CHECK(x > 0.0);
      s += x;
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("estimate_phi examples and normalization") {
  WordTopicCounts c(2, 1);
  c.increment(0, 0);
  const PhiEstimator phi(c, 0.5, 2);
  CHECK(phi(0, 0) == doctest::Approx(1.5 / 2.0));
  CHECK(phi(1, 0) == doctest::Approx(0.5 / 2.0));
  CHECK(phi.absent(0) == doctest::Approx(0.25));

  const WordTopicCounts zero(5, 3);
  const PhiEstimator u(zero, 0.01, 5);
  for (TopicId k = 0; k < 3; ++k)
    for (WordId v = 0; v < 5; ++v) CHECK(u(v, k) == doctest::Approx(0.2));

  const auto s = testing::random_state(8, 20, 30, 6, 12);
  const PhiEstimator p(s.counts, 0.05, 30);
  for (TopicId k = 0; k < 6; ++k) {
    const auto col = p.column(k);
    double sum = 0.0;
    for (double x : col) sum += x;
    CHECK(std::abs(sum - 1.0) < 1e-10);
  }
}

TEST_CASE("gibbs oracle: hand-evaluated two-topic example") {
  // Theta^-=[1,0], Phi^-_v=[2,1], Psi^-=[3,2], alpha=beta=0.5, V=2:
  // [(2.5/4) * 1.5, (1.5/3) * 0.5] = [0.9375, 0.25].
  const std::vector<std::int64_t> doc{1, 0}, row{2, 1}, tot{3, 2};
  const auto p = gibbs_conditional_oracle(doc, row, tot, Hyperparameters::symmetric(2, 0.5, 0.5), 2);
  CHECK(p[0] == doctest::Approx(0.9375 / 1.1875).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.25 / 1.1875).epsilon(1e-14));
  CHECK(p[0] == doctest::Approx(0.7894736842105263).epsilon(1e-14));
}

TEST_CASE("gibbs oracle: trivial cases and errors") {
  const std::vector<std::int64_t> one{3};
  CHECK(gibbs_conditional_oracle(one, one, one, Hyperparameters::symmetric(1, 0.1, 0.1), 4) ==
        std::vector<double>{1.0});

  const std::vector<std::int64_t> zeros(4, 0);
  for (double x : gibbs_conditional_oracle(zeros, zeros, zeros, Hyperparameters::symmetric(4, 0.2, 0.3), 9)) {
    CHECK(x == doctest::Approx(0.25));
  }
  const std::vector<std::int64_t> neg{1, -1};
  const std::vector<std::int64_t> ok{1, 1};
  CHECK_THROWS_AS(gibbs_conditional_oracle(neg, ok, ok, Hyperparameters::symmetric(2, 0.1, 0.1), 2),
                  ConsistencyError);
}

TEST_CASE("gibbs oracle agrees with the direct formula and is normalized") {
  auto s = testing::random_state(21, 6, 8, 4, 6);
  const Hyperparameters h{{0.3, 1.2, 0.05, 2.0}, 0.07};
  for (std::size_t d = 0; d < s.docs.size(); ++d) {
    for (std::size_t i = 0; i < s.docs[d].tokens.size(); ++i) {
      const WordId v = s.docs[d].tokens[i];
      const TopicId k = s.z[d][i];
      s.counts.decrement(v, k);
      std::vector<TopicId> excl = s.z[d];
      excl.erase(excl.begin() + static_cast<std::ptrdiff_t>(i));
      const auto lib = gibbs_conditional_oracle(v, rebuild_doc_counts(excl, 4), s.counts, h, 8);
      const auto ref = testing::normalized(testing::dense_mass(v, excl, s.counts, h, 8));
      double sum = 0.0;
      for (std::size_t t = 0; t < 4; ++t) {
        CHECK(lib[t] > 0.0);
        CHECK(std::abs(lib[t] - ref[t]) < 1e-14);
        sum += lib[t];
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
      s.counts.increment(v, k);
    }
  }
}

TEST_CASE("rebuild_doc_counts") {
  const std::vector<TopicId> a{0, 0, 1};
  CHECK(rebuild_doc_counts(a, 3) == doc_counts({{0, 2}, {1, 1}}));
  CHECK(rebuild_doc_counts({}, 3).empty());
  const std::vector<TopicId> b{2, 2, 2, 2};
  CHECK(rebuild_doc_counts(b, 3) == doc_counts({{2, 4}}));
  const std::vector<TopicId> bad{3};
  CHECK_THROWS_AS(rebuild_doc_counts(bad, 3), DataError);
}

TEST_CASE("sparse rows stay sorted without zeros; conservation under random edits") {
  auto s = testing::random_state(5, 15, 10, 5, 10);
  Rng rng(77);
  for (int step = 0; step < 2000; ++step) {
    const auto d = rng.below(s.docs.size());
    const auto i = rng.below(s.docs[d].tokens.size());
    const WordId v = s.docs[d].tokens[i];
    s.counts.decrement(v, s.z[d][i]);
    s.z[d][i] = static_cast<TopicId>(rng.below(5));
    s.counts.increment(v, s.z[d][i]);
  }
  CHECK(testing::conserved(s.counts, s.docs, s.z));
  for (WordId v = 0; v < 10; ++v) {
    const auto e = s.counts.row(v).entries();
    for (std::size_t j = 0; j < e.size(); ++j) {
      CHECK(e[j].count > 0);
      if (j) CHECK(e[j - 1].topic < e[j].topic);
    }
  }
  WordTopicCounts empty(2, 2);
  CHECK_THROWS_AS(empty.decrement(0, 0), ConsistencyError);
}

TEST_CASE("hyperparameter validation") {
  CHECK_THROWS_AS((Hyperparameters{{0.1, 0.0}, 0.1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((Hyperparameters{{0.1}, -1.0}.validate()), std::invalid_argument);
  CHECK_NOTHROW((Hyperparameters{{0.1}, 0.1}.validate()));
}
