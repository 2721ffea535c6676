#include <doctest.h>

#include <set>

#include "peacock/runtime/checkpoint.hpp"
#include "peacock/runtime/cluster.hpp"
#include "peacock/runtime/sequential.hpp"
#include "peacock/synthetic.hpp"
#include "support.hpp"

using namespace peacock;

namespace {

SyntheticCorpus small_corpus(std::uint64_t seed = 3, std::size_t D = 120) {
  SyntheticSpec s;
  s.docs = D;
  s.vocab = 80;
  s.topics = 5;
  s.mean_length = 12;
  s.seed = seed;
  return generate_corpus(s);
}

ClusterConfig small_config(std::uint32_t C, std::uint32_t M, std::uint32_t K = 6) {
  ClusterConfig c;
  c.C = C;
  c.M = M;
  c.K = K;
  c.sync_period = 2;
  c.seed = 11;
  c.pipeline.T = 3;
  c.pipeline.L = 16;
  c.timeout_ms = 5000;
  return c;
}

std::vector<std::uint8_t> fingerprint(const Cluster& c) {
  return encode_training_state(c.model().counts, c.assignments(), c.hyper());
}

}  // namespace

TEST_CASE("one configuration with one server reproduces the sequential sampler") {
  const auto corpus = small_corpus();
  const auto cfg = small_config(1, 1);
  Cluster cluster(corpus.docs, corpus.vocab, cfg);
  SequentialTrainer seq(corpus.docs, corpus.vocab, cfg);
  CHECK(fingerprint(cluster) == encode_training_state(seq.counts(), seq.assignments(), seq.hyper()));
  for (int it = 1; it <= 20; ++it) {
    cluster.run_iteration();
    seq.run_iteration();
    REQUIRE_MESSAGE(fingerprint(cluster) == encode_training_state(seq.counts(), seq.assignments(), seq.hyper()),
                    "diverged at iteration " << it);
  }
}

TEST_CASE("Psi and counts are conserved at every barrier") {
  const auto corpus = small_corpus(5);
  for (auto gran : {PsiGranularity::per_diagonal, PsiGranularity::per_segment}) {
    auto cfg = small_config(1, 3);
    cfg.granularity = gran;
    cfg.data_segments = 2;
    Cluster cluster(corpus.docs, corpus.vocab, cfg);
    std::size_t barriers = 0;
    cluster.set_observer({nullptr, [&](const Cluster& c, const BarrierEvent&) {
                            c.verify_conservation();
                            ++barriers;
                          }});
    for (int it = 0; it < 3; ++it) cluster.run_iteration();
    const std::size_t per_iter = gran == PsiGranularity::per_diagonal ? 3 * 2 : 2;
    CHECK(barriers == 3 * per_iter);
    CHECK_NOTHROW(cluster.verify_conservation());
  }
}

TEST_CASE("blocks sampled together never share a data or sampling server") {
  const auto corpus = small_corpus(7);
  for (auto gran : {PsiGranularity::per_diagonal, PsiGranularity::per_segment}) {
    auto cfg = small_config(1, 4);
    cfg.granularity = gran;
    Cluster cluster(corpus.docs, corpus.vocab, cfg);
    std::vector<BlockEvent> events;
    cluster.set_observer({[&](const BlockEvent& e) { events.push_back(e); }, nullptr});
    cluster.run_iteration();
    const std::uint32_t rows = cfg.rows();
    CHECK(events.size() == rows * cfg.M);
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (const auto& e : events) CHECK(seen.insert({e.block.row, e.block.col}).second);
    for (std::size_t i = 0; i < events.size(); ++i)
      for (std::size_t j = 0; j < i; ++j) {
        const auto& a = events[i];
        const auto& b = events[j];
        const bool share = a.block.row == b.block.row || a.block.col == b.block.col;
        const bool overlap = a.start < b.end && b.start < a.end;
        CHECK_FALSE((share && overlap));
      }
  }
}

TEST_CASE("threaded execution matches deterministic execution") {
  const auto corpus = small_corpus(9);
  for (auto gran : {PsiGranularity::per_diagonal, PsiGranularity::per_segment}) {
    auto cfg = small_config(2, 2);
    cfg.granularity = gran;
    Cluster det(corpus.docs, corpus.vocab, cfg);
    cfg.mode = RunMode::threaded;
    Cluster thr(corpus.docs, corpus.vocab, cfg);
    for (int it = 0; it < 4; ++it) {
      det.run_iteration();
      thr.run_iteration();
    }
    CHECK(serialize_state(det.state()) == serialize_state(thr.state()));
  }
}

TEST_CASE("a failed sampling server is recovered without changing the result") {
  const auto corpus = small_corpus(13);
  for (auto mode : {RunMode::deterministic, RunMode::threaded}) {
    auto cfg = small_config(2, 2);
    cfg.mode = mode;
    cfg.timeout_ms = 2000;
    Cluster clean(corpus.docs, corpus.vocab, cfg);
    Cluster faulty(corpus.docs, corpus.vocab, cfg);
    faulty.inject_fault({1, 3, 1, 2});
    std::size_t recoveries = 0;
    for (int it = 0; it < 5; ++it) {
      clean.run_iteration();
      recoveries += faulty.run_iteration().recoveries;
    }
    CHECK(recoveries == 1);
    CHECK(serialize_state(clean.state()) == serialize_state(faulty.state()));
  }
}

TEST_CASE("resuming from a checkpoint continues the same run") {
  const auto corpus = small_corpus(17);
  const auto cfg = small_config(2, 2);
  Cluster full(corpus.docs, corpus.vocab, cfg);
  for (int it = 0; it < 6; ++it) full.run_iteration();

  Cluster first(corpus.docs, corpus.vocab, cfg);
  for (int it = 0; it < 3; ++it) first.run_iteration();
  const auto saved = deserialize_state(serialize_state(first.state()), "memory");
  Cluster resumed(corpus.docs, corpus.vocab, cfg, saved);
  CHECK(resumed.iteration() == 3);
  for (int it = 0; it < 3; ++it) resumed.run_iteration();
  CHECK(serialize_state(full.state()) == serialize_state(resumed.state()));

  auto other = cfg;
  other.M = 3;
  CHECK_THROWS_AS(Cluster(corpus.docs, corpus.vocab, other, saved), TopologyMismatch);
  auto other_docs = corpus.docs;
  other_docs.pop_back();
  CHECK_THROWS_AS(Cluster(other_docs, corpus.vocab, cfg, saved), TopologyMismatch);
}

TEST_CASE("aggregation across configurations conserves tokens") {
  const auto corpus = small_corpus(19);
  auto cfg = small_config(3, 2);
  cfg.sync_period = 1;
  Cluster cluster(corpus.docs, corpus.vocab, cfg);
  Count tokens = 0;
  for (const auto& d : corpus.docs) tokens += d.tokens.size();
  for (int it = 0; it < 4; ++it) {
    const auto r = cluster.run_iteration();
    CHECK(r.aggregated);
    CHECK_NOTHROW(cluster.verify_conservation());
    const auto m = cluster.model();
    CHECK(m.counts.token_count() == tokens);
    CHECK(m.counts.column_sums() == std::vector<Count>(m.counts.totals().begin(), m.counts.totals().end()));
  }
  const auto& alpha = cluster.hyper().alpha;
  CHECK(std::all_of(alpha.begin(), alpha.end(), [](double a) { return a > 0.0; }));
}

TEST_CASE("invalid partitions are rejected") {
  const auto corpus = small_corpus(23, 4);
  CHECK_THROWS_AS(Cluster(corpus.docs, corpus.vocab, small_config(3, 2)), DataError);
  auto docs = corpus.docs;
  docs[0].tokens.push_back(static_cast<WordId>(corpus.vocab.size() + 3));
  CHECK_THROWS_AS(Cluster(docs, corpus.vocab, small_config(1, 1)), DataError);
}
