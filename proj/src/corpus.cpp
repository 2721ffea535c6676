#include "peacock/corpus.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "peacock/rng.hpp"

namespace peacock {

Vocabulary::Vocabulary(std::vector<VocabEntry> entries) : entries_(std::move(entries)) {
  index_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].id != i) {
      throw DataError("vocabulary ids must be dense and id-ascending; entry " + std::to_string(i) +
                      " has id " + std::to_string(entries_[i].id));
    }
    if (!index_.emplace(entries_[i].word, static_cast<WordId>(i)).second) {
      throw DataError("duplicate vocabulary word '" + entries_[i].word + "'");
    }
  }
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<Count> Vocabulary::frequencies() const {
  std::vector<Count> out(entries_.size());
  for (const auto& e : entries_) out[e.id] = e.frequency;
  return out;
}

void Vocabulary::write(std::ostream& out) const {
  for (const auto& e : entries_) out << e.word << '\t' << e.id << '\t' << e.frequency << '\n';
}

Vocabulary Vocabulary::read(std::istream& in) {
  std::vector<VocabEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    VocabEntry e;
    std::string id, freq;
    if (!std::getline(fields, e.word, '\t') || !std::getline(fields, id, '\t') ||
        !std::getline(fields, freq)) {
      throw DataError("vocabulary line " + std::to_string(lineno) + ": expected word<TAB>id<TAB>frequency");
    }
    try {
      e.id = static_cast<WordId>(std::stoul(id));
      e.frequency = std::stoull(freq);
    } catch (const std::exception&) {
      throw DataError("vocabulary line " + std::to_string(lineno) + ": bad number");
    }
    entries.push_back(std::move(e));
  }
  return Vocabulary(std::move(entries));
}

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len;
    std::uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t j = 1; j < len; ++j) {
      const auto cc = static_cast<unsigned char>(text[i + j]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range code points.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
      return false;
    }
    i += len;
  }
  return true;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; }

template <typename F>
void for_each_token(std::string_view line, F&& f) {
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) f(line.substr(i, j - i));
    i = j;
  }
}

}  // namespace

PreprocessedCorpus preprocess(std::istream& raw, const PreprocessConfig& config) {
  PreprocessedCorpus result;
  PreprocessReport& report = result.report;

  // Step 1: tokenize and intern words.
  std::vector<std::string> words;
  std::unordered_map<std::string, std::uint32_t> intern;
  std::vector<std::vector<std::uint32_t>> docs;
  std::string line;
  while (std::getline(raw, line)) {
    ++report.lines_read;
    if (!is_valid_utf8(line)) {
      ++report.malformed_lines;
      continue;
    }
    std::vector<std::uint32_t> doc;
    for_each_token(line, [&](std::string_view tok) {
      auto [it, inserted] = intern.try_emplace(std::string(tok), static_cast<std::uint32_t>(words.size()));
      if (inserted) words.emplace_back(tok);
      doc.push_back(it->second);
    });
    report.tokens_read += doc.size();
    docs.push_back(std::move(doc));
  }

  std::vector<bool> alive(words.size(), true);
  std::vector<Count> freq(words.size());
  for (;;) {
    ++report.rounds;
    bool changed = false;

    std::fill(freq.begin(), freq.end(), 0);
    for (const auto& d : docs)
      for (auto w : d) ++freq[w];

    // Steps 2 and 3: frequency thresholds.
    const double upper = config.max_freq ? static_cast<double>(*config.max_freq)
                                         : config.max_freq_fraction * static_cast<double>(docs.size());
    std::vector<bool> drop(words.size(), false);
    bool any_drop = false;
    for (std::size_t w = 0; w < words.size(); ++w) {
      if (!alive[w] || freq[w] == 0) continue;
      if (freq[w] < config.min_freq) {
        drop[w] = true;
        ++report.low_freq_words;
        report.low_freq_tokens += freq[w];
      } else if (static_cast<double>(freq[w]) > upper) {
        drop[w] = true;
        ++report.high_freq_words;
        report.high_freq_tokens += freq[w];
      }
      if (drop[w]) {
        alive[w] = false;
        any_drop = true;
      }
    }
    if (any_drop) {
      changed = true;
      for (auto& d : docs) std::erase_if(d, [&](std::uint32_t w) { return drop[w]; });
    }

    // Step 4: exact-duplicate documents, first occurrence kept.
    {
      std::set<std::vector<std::uint32_t>> seen;
      std::vector<std::vector<std::uint32_t>> kept;
      kept.reserve(docs.size());
      for (auto& d : docs) {
        if (seen.insert(d).second) {
          kept.push_back(std::move(d));
        } else {
          ++report.duplicate_docs;
          changed = true;
        }
      }
      docs = std::move(kept);
    }

    // Step 5: documents with fewer than two tokens.
    const std::size_t before = docs.size();
    std::erase_if(docs, [](const auto& d) { return d.size() < 2; });
    if (docs.size() != before) {
      report.short_docs += before - docs.size();
      changed = true;
    }

    if (!changed) break;
  }

  // Final vocabulary: surviving words by descending frequency, then by word.
  std::fill(freq.begin(), freq.end(), 0);
  for (const auto& d : docs)
    for (auto w : d) ++freq[w];
  std::vector<std::uint32_t> order;
  for (std::uint32_t w = 0; w < words.size(); ++w)
    if (freq[w] > 0) order.push_back(w);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (freq[a] != freq[b]) return freq[a] > freq[b];
    return words[a] < words[b];
  });
  std::vector<WordId> remap(words.size(), 0);
  std::vector<VocabEntry> entries;
  entries.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    remap[order[i]] = static_cast<WordId>(i);
    entries.push_back({words[order[i]], static_cast<WordId>(i), freq[order[i]]});
  }
  result.vocab = Vocabulary(std::move(entries));

  result.docs.reserve(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    Document doc;
    doc.id = static_cast<DocId>(d);
    doc.tokens.reserve(docs[d].size());
    for (auto w : docs[d]) doc.tokens.push_back(remap[w]);
    result.docs.push_back(std::move(doc));
  }
  return result;
}

void write_corpus(std::ostream& out, std::span<const Document> docs, const Vocabulary& vocab) {
  for (const auto& d : docs) {
    for (std::size_t i = 0; i < d.tokens.size(); ++i) {
      if (i) out << ' ';
      out << vocab[d.tokens[i]].word;
    }
    out << '\n';
  }
}

std::vector<Document> read_corpus(std::istream& in, const Vocabulary& vocab, std::size_t* unknown_tokens) {
  std::vector<Document> docs;
  std::size_t unknown = 0;
  std::string line;
  while (std::getline(in, line)) {
    Document doc;
    doc.id = static_cast<DocId>(docs.size());
    for_each_token(line, [&](std::string_view tok) {
      if (auto id = vocab.find(tok)) {
        doc.tokens.push_back(*id);
      } else {
        ++unknown;
      }
    });
    docs.push_back(std::move(doc));
  }
  if (unknown_tokens) *unknown_tokens = unknown;
  return docs;
}

Count BlockGrid::token_count() const {
  Count n = 0;
  for (const auto& b : blocks) n += b.size();
  return n;
}

std::vector<std::uint32_t> place_words(const Vocabulary& vocab, std::uint32_t shards, std::uint64_t seed) {
  if (shards == 0) throw std::invalid_argument("place_words: shard count must be >= 1");
  const auto freq = vocab.frequencies();
  std::vector<WordId> order(freq.size());
  std::iota(order.begin(), order.end(), 0);
  // Seeded shuffle first, then a stable sort: equal frequencies keep the
  // shuffled relative order.
  Rng rng(seed, 0x706c616365ull);
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](WordId a, WordId b) { return freq[a] > freq[b]; });

  std::vector<std::uint32_t> col(freq.size(), 0);
  std::vector<Count> load(shards, 0);
  for (WordId w : order) {
    auto lightest = static_cast<std::uint32_t>(std::min_element(load.begin(), load.end()) - load.begin());
    col[w] = lightest;
    load[lightest] += freq[w];
  }
  return col;
}

std::vector<Count> shard_loads(const Vocabulary& vocab, std::span<const std::uint32_t> col_of_word,
                               std::uint32_t shards) {
  std::vector<Count> load(shards, 0);
  const auto freq = vocab.frequencies();
  for (std::size_t w = 0; w < col_of_word.size(); ++w) load.at(col_of_word[w]) += freq[w];
  return load;
}

BlockGrid shuffle_and_partition(std::span<const Document> docs, const Vocabulary& vocab, std::uint32_t shards,
                                std::uint64_t seed) {
  return shuffle_and_partition(docs, vocab, shards, shards, seed);
}

BlockGrid shuffle_and_partition(std::span<const Document> docs, const Vocabulary& vocab, std::uint32_t rows,
                                std::uint32_t cols, std::uint64_t seed) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("shuffle_and_partition: shard counts must be >= 1");
  if (rows > docs.size()) {
    throw std::invalid_argument("shuffle_and_partition: " + std::to_string(rows) + " row shards for " +
                                std::to_string(docs.size()) + " documents");
  }
  if (cols > vocab.size()) {
    throw std::invalid_argument("shuffle_and_partition: " + std::to_string(cols) + " column shards for " +
                                std::to_string(vocab.size()) + " words");
  }

  BlockGrid grid;
  grid.rows = rows;
  grid.cols = cols;
  grid.col_of_word = place_words(vocab, cols, seed);

  std::vector<DocId> perm(docs.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed, 0x726f7773ull);
  std::shuffle(perm.begin(), perm.end(), rng);

  grid.row_of_doc.assign(docs.size(), 0);
  grid.row_docs.assign(rows, {});
  const std::size_t n = docs.size();
  for (std::uint32_t r = 0; r < rows; ++r) {
    const std::size_t lo = n * r / rows, hi = n * (r + 1) / rows;
    for (std::size_t i = lo; i < hi; ++i) {
      grid.row_of_doc[perm[i]] = r;
      grid.row_docs[r].push_back(perm[i]);
    }
  }

  grid.blocks.assign(static_cast<std::size_t>(rows) * cols, {});
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (DocId d : grid.row_docs[r]) {
      const auto& toks = docs[d].tokens;
      for (std::uint32_t p = 0; p < toks.size(); ++p) {
        if (toks[p] >= vocab.size()) throw DataError("token word id outside the vocabulary");
        grid.blocks[static_cast<std::size_t>(r) * cols + grid.col_of_word[toks[p]]].push_back({d, p});
      }
    }
  }
  return grid;
}

}  // namespace peacock
