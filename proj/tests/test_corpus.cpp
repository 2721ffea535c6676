#include <doctest.h>

#include <set>
#include <sstream>

#include "peacock/corpus.hpp"
#include "support.hpp"

using namespace peacock;

namespace {

PreprocessedCorpus run(const std::string& text, Count min_freq = 1, std::optional<Count> max_freq = 1000) {
  std::istringstream in(text);
  PreprocessConfig c;
  c.min_freq = min_freq;
  c.max_freq = max_freq;
  return preprocess(in, c);
}

std::vector<std::string> words_of(const PreprocessedCorpus& p, const Document& d) {
  std::vector<std::string> out;
  for (auto v : d.tokens) out.push_back(p.vocab[v].word);
  return out;
}

}  // namespace

TEST_CASE("single-word line is dropped") {
  const auto p = run("hello\nred apple\n");
  REQUIRE(p.docs.size() == 1);
  CHECK(words_of(p, p.docs[0]) == std::vector<std::string>{"red", "apple"});
  CHECK(p.report.short_docs == 1);
  CHECK_FALSE(p.vocab.find("hello").has_value());
}

TEST_CASE("identical lines keep one copy") {
  const auto p = run("red apple\nred apple\ngreen pear\n");
  CHECK(p.docs.size() == 2);
  CHECK(p.report.duplicate_docs == 1);
}

TEST_CASE("low-frequency word is removed and documents refiltered") {
  const auto p = run("zzz aa\naa bb\nbb aa cc cc\n", 2);
  CHECK_FALSE(p.vocab.find("zzz").has_value());
  for (const auto& e : p.vocab.entries()) CHECK(e.frequency >= 2);
  CHECK(p.report.low_freq_words == 1);
  // "zzz aa" shrank to "aa" and was then dropped as too short.
  CHECK(p.docs.size() == 2);
  CHECK(p.report.short_docs == 1);
}

TEST_CASE("high-frequency words are removed") {
  const auto p = run("the cat sat\nthe dog ran\nthe cat ran\nthe dog sat\n", 1, Count{3});
  CHECK_FALSE(p.vocab.find("the").has_value());
  CHECK(p.report.high_freq_words == 1);
  for (const auto& e : p.vocab.entries()) CHECK(e.frequency <= 3);
}

TEST_CASE("empty input gives an empty corpus and zero report") {
  const auto p = run("");
  CHECK(p.docs.empty());
  CHECK(p.vocab.empty());
  CHECK(p.report.lines_read == 0);
  CHECK(p.report.tokens_read == 0);
  CHECK(p.report.duplicate_docs == 0);
}

TEST_CASE("malformed UTF-8 lines are skipped and counted") {
  const std::string bad = std::string("caf\xC3 ok") + "\n";
  const auto p = run(bad + "good line\n");
  CHECK(p.report.malformed_lines == 1);
  CHECK(p.docs.size() == 1);
  CHECK(is_valid_utf8("na\xC3\xAFve"));
  CHECK_FALSE(is_valid_utf8("\xC0\x80"));
  CHECK_FALSE(is_valid_utf8("\xED\xA0\x80"));
}

TEST_CASE("preprocess output is a fixed point") {
  const auto syn = generate_corpus({200, 80, 4, 6.0, 1, {}, 0.05, 3});
  std::ostringstream raw;
  write_corpus(raw, syn.docs, syn.vocab);
  std::istringstream in1(raw.str());
  PreprocessConfig cfg;
  cfg.min_freq = 3;
  cfg.max_freq_fraction = 0.5;
  const auto first = preprocess(in1, cfg);
  std::ostringstream again;
  write_corpus(again, first.docs, first.vocab);
  std::istringstream in2(again.str());
  const auto second = preprocess(in2, cfg);
  CHECK(second.docs == first.docs);
  CHECK(second.vocab == first.vocab);
  for (const auto& d : first.docs) CHECK(d.tokens.size() >= 2);
  for (std::size_t i = 0; i < first.vocab.size(); ++i) CHECK(first.vocab[static_cast<WordId>(i)].id == i);
}

TEST_CASE("vocabulary file round trip and validation") {
  const auto p = run("a b c\nb c d\nc d e\n");
  std::stringstream io;
  p.vocab.write(io);
  CHECK(Vocabulary::read(io) == p.vocab);
  CHECK_THROWS_AS(Vocabulary({{"a", 1, 1}}), DataError);
  CHECK_THROWS_AS(Vocabulary({{"a", 0, 1}, {"a", 1, 1}}), DataError);
}

TEST_CASE("read_corpus keeps line alignment and drops unknown words") {
  const auto v = testing::numbered_vocab(3);
  std::istringstream in("w0 w1 zz\n\nw2\n");
  std::size_t unknown = 0;
  const auto docs = read_corpus(in, v, &unknown);
  REQUIRE(docs.size() == 3);
  CHECK(docs[0].tokens == std::vector<WordId>{0, 1});
  CHECK(docs[1].tokens.empty());
  CHECK(unknown == 1);
}

TEST_CASE("weighted round robin balances the example loads") {
  const Vocabulary v({{"a", 0, 10}, {"b", 1, 9}, {"c", 2, 1}, {"d", 3, 1}, {"e", 4, 1}});
  const auto cols = place_words(v, 2, 5);
  const auto loads = shard_loads(v, cols, 2);
  CHECK(loads == std::vector<Count>{11, 11});
  CHECK(cols[0] != cols[1]);
}

TEST_CASE("place_words: greedy placement never leaves a gap larger than the largest word") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed, 5);
    std::vector<VocabEntry> e;
    Count biggest = 0;
    for (WordId w = 0; w < 60; ++w) {
      const Count f = 1 + rng.below(100);
      biggest = std::max(biggest, f);
      e.push_back({"w" + std::to_string(w), w, f});
    }
    const Vocabulary v(e);
    const auto loads = shard_loads(v, place_words(v, 4, seed), 4);
    const auto [lo, hi] = std::minmax_element(loads.begin(), loads.end());
    CHECK(*hi - *lo <= biggest);
  }
}

TEST_CASE("block grid covers every token exactly once") {
  const auto syn = generate_corpus({60, 40, 3, 8.0, 2, {}, 0.1, 9});
  for (std::uint32_t M : {1u, 2u, 3u}) {
    const auto g = shuffle_and_partition(syn.docs, syn.vocab, M + 1, M, 4);
    std::set<std::pair<DocId, std::uint32_t>> seen;
    for (std::uint32_t r = 0; r < g.rows; ++r) {
      for (std::uint32_t c = 0; c < g.cols; ++c) {
        for (const auto& t : g.block(r, c)) {
          CHECK(g.row_of_doc[t.doc] == r);
          CHECK(g.col_of_word[syn.docs[t.doc].tokens[t.pos]] == c);
          CHECK(seen.insert({t.doc, t.pos}).second);
        }
      }
    }
    Count total = 0;
    for (const auto& d : syn.docs) total += d.tokens.size();
    CHECK(seen.size() == total);
    CHECK(g.token_count() == total);
    // Row shards differ in size by at most one document.
    std::size_t lo = syn.docs.size(), hi = 0;
    for (const auto& r : g.row_docs) lo = std::min(lo, r.size()), hi = std::max(hi, r.size());
    CHECK(hi - lo <= 1);
  }
}

TEST_CASE("partition is seeded") {
  const auto syn = generate_corpus({30, 20, 2, 5.0, 2, {}, 0.1, 1});
  CHECK(shuffle_and_partition(syn.docs, syn.vocab, 2, 1) == shuffle_and_partition(syn.docs, syn.vocab, 2, 1));
  CHECK_FALSE(shuffle_and_partition(syn.docs, syn.vocab, 2, 1).row_docs ==
              shuffle_and_partition(syn.docs, syn.vocab, 2, 2).row_docs);
  CHECK_THROWS_AS(shuffle_and_partition(syn.docs, syn.vocab, 31, 1, 0), std::invalid_argument);
}
