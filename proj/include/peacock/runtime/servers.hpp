#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "peacock/corpus.hpp"
#include "peacock/hyperopt.hpp"
#include "peacock/lda.hpp"
#include "peacock/rng.hpp"
#include "peacock/runtime/transport.hpp"
#include "peacock/sampler.hpp"

namespace peacock {

/// A request plus, per token, where its label lives in the data server.
/// The request may be moved out for sending; the index vectors stay.
struct OutboundPackage {
  PackageRequest request;
  std::vector<std::uint32_t> local_doc;
  std::vector<std::uint32_t> position;
};

/// Owns the topic labels of one row shard of documents, double-buffered:
/// packages read z_old, responses write z_new, commit() copies new to old.
class DataServer {
 public:
  DataServer(std::uint32_t row, std::vector<DocId> docs, std::vector<std::vector<TopicId>> z);

  std::uint32_t row() const { return row_; }
  /// Global document positions, in shard order.
  std::span<const DocId> docs() const { return docs_; }
  const std::vector<std::vector<TopicId>>& z() const { return z_new_; }
  const std::vector<std::vector<TopicId>>& z_old() const { return z_old_; }

  /// Packages for the block formed by `local_docs` and column `col`. Each
  /// package carries whole documents; tokens outside the column ride along
  /// as context for the document-topic counts.
  std::vector<OutboundPackage> make_packages(std::span<const std::uint32_t> local_docs,
                                             std::span<const Document> corpus,
                                             std::span<const std::uint32_t> col_of_word, std::uint32_t col,
                                             std::uint32_t block_id, std::uint32_t L) const;

  /// Writes a response's label changes into z_new. A change index outside
  /// the package throws DataError.
  void apply_z_response(const OutboundPackage& package, const PackageResponse& response);

  void commit() { z_old_ = z_new_; }
  AlphaSufficientStats count_ntn(std::size_t num_topics) const;

 private:
  std::uint32_t row_;
  std::vector<DocId> docs_;
  std::vector<std::vector<TopicId>> z_old_;
  std::vector<std::vector<TopicId>> z_new_;
};

/// Owns one word shard Phi^m and a local copy of Psi (the shard's totals),
/// and resamples the tokens of its words in incoming packages.
class SamplingServer : public Endpoint {
 public:
  /// `owned[v]` marks the shard's words. The aggregation base starts as a
  /// copy of `shard`.
  SamplingServer(std::uint32_t index, WordTopicCounts shard, std::vector<std::uint8_t> owned, Hyperparameters hyper,
                 std::size_t vocab_size, Rng rng);

  Message handle(const Message& request) override;

  std::uint32_t index() const { return index_; }
  const WordTopicCounts& shard() const { return *shard_; }
  const WordTopicCounts& base() const { return base_; }
  const Hyperparameters& hyper() const { return sampler_->hyperparameters(); }
  const Rng& rng() const { return rng_; }
  std::uint64_t packages_handled() const { return packages_; }

  /// Rows as of the last aggregation; deltas are reported against them.
  void set_base(WordTopicCounts base) { base_ = std::move(base); }

  /// Fault injection: the n-th package from now throws WorkerFailure.
  void arm_failure(std::uint64_t nth_package) { fail_countdown_ = nth_package; }

 private:
  PackageResponse sample_package(const PackageRequest& request);
  PhiDelta delta_since_base() const;
  void apply_delta(const PhiDelta& delta);

  std::uint32_t index_;
  std::unique_ptr<WordTopicCounts> shard_;
  WordTopicCounts base_;
  std::vector<std::uint8_t> owned_;
  std::size_t vocab_size_;
  Rng rng_;
  std::unique_ptr<SparseSampler> sampler_;

  std::optional<std::uint32_t> open_block_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, PackageResponse> replies_;
  std::uint64_t packages_ = 0;
  std::optional<std::uint64_t> fail_countdown_;

  std::vector<WordId> words_;
  std::vector<TopicId> z_;
  std::vector<std::uint8_t> mask_;
};

/// Holds the global Phi rows of one word shard across configurations.
class AggregationServer {
 public:
  AggregationServer(WordTopicCounts global, std::vector<std::uint8_t> owned);

  /// Adds every configuration's delta onto the global rows, clamps negative
  /// results to zero and recomputes the shard's column sums. Returns, per
  /// configuration, the delta that turns its local rows into the new global
  /// rows. Entries naming a word outside the shard or a topic >= K throw
  /// DataError.
  std::vector<PhiDelta> aggregate(std::span<const PhiDelta> deltas);

  const WordTopicCounts& global() const { return global_; }
  std::size_t clamped_entries() const { return clamped_; }

 private:
  WordTopicCounts global_;
  std::vector<std::uint8_t> owned_;
  std::size_t clamped_ = 0;
};

}  // namespace peacock
