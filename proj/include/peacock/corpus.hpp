#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "peacock/types.hpp"

namespace peacock {

struct VocabEntry {
  std::string word;
  WordId id = 0;
  Count frequency = 0;

  friend bool operator==(const VocabEntry&, const VocabEntry&) = default;
};

/// Dense word <-> id mapping with corpus frequencies. Ids are exactly [0, V).
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Throws DataError unless ids are dense, unique and words are distinct.
  explicit Vocabulary(std::vector<VocabEntry> entries);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const VocabEntry& operator[](WordId id) const { return entries_.at(id); }
  std::optional<WordId> find(std::string_view word) const;
  std::span<const VocabEntry> entries() const { return entries_; }
  std::vector<Count> frequencies() const;

  /// `word<TAB>id<TAB>frequency` per line, id-ascending.
  void write(std::ostream& out) const;
  static Vocabulary read(std::istream& in);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, WordId> index_;
};

struct Document {
  DocId id = 0;
  std::vector<WordId> tokens;

  friend bool operator==(const Document&, const Document&) = default;
};

struct PreprocessConfig {
  Count min_freq = 5;
  /// Absolute upper frequency bound; when unset, `max_freq_fraction * D`.
  std::optional<Count> max_freq;
  double max_freq_fraction = 0.2;
};

/// Counts removed by each preprocessing step, summed over filtering rounds.
struct PreprocessReport {
  std::size_t lines_read = 0;
  std::size_t malformed_lines = 0;
  Count tokens_read = 0;
  std::size_t low_freq_words = 0;
  Count low_freq_tokens = 0;
  std::size_t high_freq_words = 0;
  Count high_freq_tokens = 0;
  std::size_t duplicate_docs = 0;
  std::size_t short_docs = 0;
  std::size_t rounds = 0;

  friend bool operator==(const PreprocessReport&, const PreprocessReport&) = default;
};

struct PreprocessedCorpus {
  Vocabulary vocab;
  std::vector<Document> docs;
  PreprocessReport report;
};

/// Tokenize one-document-per-line UTF-8 text and apply, in order: frequency
/// counting, the low- and high-frequency word filters, exact-duplicate
/// document removal and the two-token minimum. Removing words can push
/// other words or documents under a threshold, so the filters repeat until
/// nothing changes; the result is therefore a fixed point of preprocess().
PreprocessedCorpus preprocess(std::istream& raw, const PreprocessConfig& config);

bool is_valid_utf8(std::string_view text);

/// Writes documents back as whitespace-separated words, one per line.
void write_corpus(std::ostream& out, std::span<const Document> docs, const Vocabulary& vocab);

/// Reads a corpus file against a fixed vocabulary; unknown words are dropped.
std::vector<Document> read_corpus(std::istream& in, const Vocabulary& vocab,
                                  std::size_t* unknown_tokens = nullptr);

struct TokenRef {
  DocId doc = 0;
  std::uint32_t pos = 0;

  friend bool operator==(const TokenRef&, const TokenRef&) = default;
};

/// Documents split into row shards (data servers) and words into column
/// shards (sampling servers). Block (r, c) lists, in row order, the tokens of
/// row-r documents whose word belongs to column c. Documents are referred to
/// by their position in the span the grid was built from.
struct BlockGrid {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint32_t> row_of_doc;   // by document position
  std::vector<std::uint32_t> col_of_word;  // by WordId
  std::vector<std::vector<DocId>> row_docs;
  std::vector<std::vector<TokenRef>> blocks;  // row-major, rows * cols

  const std::vector<TokenRef>& block(std::uint32_t r, std::uint32_t c) const {
    return blocks.at(static_cast<std::size_t>(r) * cols + c);
  }
  Count token_count() const;

  friend bool operator==(const BlockGrid&, const BlockGrid&) = default;
};

/// Weighted round-robin: words by descending frequency (seeded order among
/// equal frequencies), each to the currently lightest shard, lowest index on
/// ties.
std::vector<std::uint32_t> place_words(const Vocabulary& vocab, std::uint32_t shards,
                                       std::uint64_t seed = 0);

std::vector<Count> shard_loads(const Vocabulary& vocab, std::span<const std::uint32_t> col_of_word,
                               std::uint32_t shards);

/// M x M grid. Documents are permuted with `seed` and cut into equal-count
/// row shards; columns come from place_words.
BlockGrid shuffle_and_partition(std::span<const Document> docs, const Vocabulary& vocab,
                                std::uint32_t shards, std::uint64_t seed);

/// General form with a separate data-server (row) count.
BlockGrid shuffle_and_partition(std::span<const Document> docs, const Vocabulary& vocab,
                                std::uint32_t rows, std::uint32_t cols, std::uint64_t seed);

}  // namespace peacock
