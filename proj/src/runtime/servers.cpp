#include "peacock/runtime/servers.hpp"

#include <algorithm>
#include <string>

namespace peacock {

DataServer::DataServer(std::uint32_t row, std::vector<DocId> docs, std::vector<std::vector<TopicId>> z)
    : row_(row), docs_(std::move(docs)), z_old_(z), z_new_(std::move(z)) {
  if (docs_.size() != z_new_.size()) throw std::invalid_argument("DataServer: one label vector per document");
}

std::vector<OutboundPackage> DataServer::make_packages(std::span<const std::uint32_t> local_docs,
                                                       std::span<const Document> corpus,
                                                       std::span<const std::uint32_t> col_of_word, std::uint32_t col,
                                                       std::uint32_t block_id, std::uint32_t L) const {
  std::vector<std::uint32_t> in_block(local_docs.size(), 0);
  for (std::size_t i = 0; i < local_docs.size(); ++i) {
    for (WordId w : corpus[docs_[local_docs[i]]].tokens) in_block[i] += col_of_word[w] == col;
  }
  std::vector<OutboundPackage> out;
  for (const auto& group : group_packages(in_block, L)) {
    OutboundPackage p;
    p.request.block_id = block_id;
    p.request.seq = static_cast<std::uint32_t>(out.size());
    for (std::size_t i : group) {
      const std::uint32_t local = local_docs[i];
      const DocId d = docs_[local];
      const auto& tokens = corpus[d].tokens;
      for (std::uint32_t pos = 0; pos < tokens.size(); ++pos) {
        p.request.tokens.push_back({d, tokens[pos], z_old_[local][pos]});
        p.local_doc.push_back(local);
        p.position.push_back(pos);
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

void DataServer::apply_z_response(const OutboundPackage& package, const PackageResponse& response) {
  for (const auto& c : response.changes) {
    if (c.index >= package.local_doc.size()) {
      throw DataError("z response names token " + std::to_string(c.index) + " of a " +
                      std::to_string(package.local_doc.size()) + "-token package");
    }
    z_new_[package.local_doc[c.index]][package.position[c.index]] = c.topic;
  }
}

AlphaSufficientStats DataServer::count_ntn(std::size_t num_topics) const {
  AlphaSufficientStats stats(num_topics);
  for (const auto& z : z_new_) stats.add_document(rebuild_doc_counts(z, num_topics));
  return stats;
}

SamplingServer::SamplingServer(std::uint32_t index, WordTopicCounts shard, std::vector<std::uint8_t> owned,
                               Hyperparameters hyper, std::size_t vocab_size, Rng rng)
    : index_(index),
      shard_(std::make_unique<WordTopicCounts>(std::move(shard))),
      base_(*shard_),
      owned_(std::move(owned)),
      vocab_size_(vocab_size),
      rng_(std::move(rng)) {
  if (owned_.size() != vocab_size_ || shard_->num_words() != vocab_size_) {
    throw std::invalid_argument("SamplingServer: shard and ownership must cover the vocabulary");
  }
  sampler_ = std::make_unique<SparseSampler>(*shard_, std::move(hyper), vocab_size_);
}

Message SamplingServer::handle(const Message& request) {
  if (const auto* p = std::get_if<PackageRequest>(&request)) {
    const auto key = std::make_pair(p->block_id, p->seq);
    if (auto it = replies_.find(key); it != replies_.end()) return it->second;
    if (fail_countdown_ && --*fail_countdown_ == 0) {
      fail_countdown_.reset();
      throw WorkerFailure("sampling server " + std::to_string(index_) + " failed (injected)");
    }
    auto reply = sample_package(*p);
    replies_.emplace(key, reply);
    return reply;
  }
  if (std::holds_alternative<PsiRequest>(request)) {
    const auto t = shard_->totals();
    return PsiSync{{t.begin(), t.end()}};
  }
  if (const auto* s = std::get_if<PsiSync>(&request)) {
    if (s->psi.size() != shard_->num_topics()) throw DataError("PsiSync: wrong topic count");
    shard_->set_totals(s->psi);
    sampler_->begin_block();
    replies_.clear();
    return Ack{};
  }
  if (const auto* a = std::get_if<AlphaSync>(&request)) {
    Hyperparameters h = sampler_->hyperparameters();
    h.alpha = a->alpha;
    sampler_->set_hyperparameters(std::move(h));
    return Ack{};
  }
  if (std::holds_alternative<PhiDeltaRequest>(request)) return delta_since_base();
  if (const auto* d = std::get_if<PhiDelta>(&request)) {
    apply_delta(*d);
    return Ack{};
  }
  if (std::holds_alternative<Shutdown>(request)) return Ack{};
  throw DataError("sampling server: unexpected message type");
}

PackageResponse SamplingServer::sample_package(const PackageRequest& request) {
  const std::size_t K = shard_->num_topics();
  for (const auto& t : request.tokens) {
    if (t.word >= vocab_size_) throw DataError("package token word outside the vocabulary");
    if (t.topic >= K) throw DataError("package token topic outside [0, K)");
  }
  if (open_block_ != request.block_id) {
    sampler_->begin_block();
    open_block_ = request.block_id;
  }
  ++packages_;
  PackageResponse reply{request.block_id, request.seq, {}};
  const auto& tokens = request.tokens;
  for (std::size_t i = 0; i < tokens.size();) {
    std::size_t j = i;
    words_.clear();
    z_.clear();
    mask_.clear();
    bool any = false;
    for (; j < tokens.size() && tokens[j].doc == tokens[i].doc; ++j) {
      words_.push_back(tokens[j].word);
      z_.push_back(tokens[j].topic);
      mask_.push_back(owned_[tokens[j].word]);
      any = any || owned_[tokens[j].word];
    }
    if (any) {
      sampler_->sweep_document(words_, z_, rng_, mask_);
      for (std::size_t t = i; t < j; ++t) {
        if (z_[t - i] != tokens[t].topic) reply.changes.push_back({static_cast<std::uint32_t>(t), z_[t - i]});
      }
    }
    i = j;
  }
  return reply;
}

PhiDelta SamplingServer::delta_since_base() const {
  PhiDelta out;
  for (std::size_t v = 0; v < vocab_size_; ++v) {
    if (!owned_[v]) continue;
    const auto a = shard_->row(static_cast<WordId>(v)).entries();
    const auto b = base_.row(static_cast<WordId>(v)).entries();
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
      TopicId k;
      std::int64_t diff;
      if (j == b.size() || (i < a.size() && a[i].topic < b[j].topic)) {
        k = a[i].topic;
        diff = static_cast<std::int64_t>(a[i++].count);
      } else if (i == a.size() || b[j].topic < a[i].topic) {
        k = b[j].topic;
        diff = -static_cast<std::int64_t>(b[j++].count);
      } else {
        k = a[i].topic;
        diff = static_cast<std::int64_t>(a[i++].count) - static_cast<std::int64_t>(b[j++].count);
      }
      if (diff != 0) out.entries.push_back({static_cast<WordId>(v), k, diff});
    }
  }
  return out;
}

void SamplingServer::apply_delta(const PhiDelta& delta) {
  std::vector<Count> totals(shard_->totals().begin(), shard_->totals().end());
  std::size_t i = 0;
  const auto& e = delta.entries;
  while (i < e.size()) {
    const WordId v = e[i].word;
    if (v >= vocab_size_ || !owned_[v]) throw DataError("PhiDelta names a word outside the shard");
    SparseCounts row = shard_->row(v);
    for (; i < e.size() && e[i].word == v; ++i) {
      const auto& x = e[i];
      if (x.topic >= totals.size()) throw DataError("PhiDelta names a topic outside [0, K)");
      if (x.delta > 0) {
        row.increment(x.topic, static_cast<Count>(x.delta));
        totals[x.topic] += static_cast<Count>(x.delta);
      } else if (x.delta < 0) {
        row.decrement(x.topic, static_cast<Count>(-x.delta));
        totals[x.topic] -= static_cast<Count>(-x.delta);
      }
    }
    shard_->set_row(v, std::move(row));
  }
  shard_->set_totals(std::move(totals));
  base_ = *shard_;
  sampler_->begin_block();
}

AggregationServer::AggregationServer(WordTopicCounts global, std::vector<std::uint8_t> owned)
    : global_(std::move(global)), owned_(std::move(owned)) {
  global_.set_totals(global_.column_sums());
}

std::vector<PhiDelta> AggregationServer::aggregate(std::span<const PhiDelta> deltas) {
  using Key = std::pair<WordId, TopicId>;
  std::map<Key, std::int64_t> sum;
  for (const auto& d : deltas) {
    for (const auto& e : d.entries) {
      if (e.word >= global_.num_words() || !owned_[e.word]) throw DataError("aggregation: delta for an unknown word");
      if (e.topic >= global_.num_topics()) throw DataError("aggregation: delta for an unknown topic");
      sum[{e.word, e.topic}] += e.delta;
    }
  }
  // Net change actually applied per entry, after clamping.
  std::map<Key, std::int64_t> applied;
  auto it = sum.begin();
  while (it != sum.end()) {
    const WordId v = it->first.first;
    SparseCounts row = global_.row(v);
    for (; it != sum.end() && it->first.first == v; ++it) {
      const TopicId k = it->first.second;
      const auto before = static_cast<std::int64_t>(row.get(k));
      std::int64_t after = before + it->second;
      if (after < 0) {
        after = 0;
        ++clamped_;
      }
      if (after > before) row.increment(k, static_cast<Count>(after - before));
      if (after < before) row.decrement(k, static_cast<Count>(before - after));
      if (after != before) applied[it->first] = after - before;
    }
    global_.set_row(v, std::move(row));
  }
  global_.set_totals(global_.column_sums());

  // Configuration c holds base + delta_c; it needs base + applied.
  std::vector<PhiDelta> out(deltas.size());
  for (std::size_t c = 0; c < deltas.size(); ++c) {
    std::map<Key, std::int64_t> diff = applied;
    for (const auto& e : deltas[c].entries) diff[{e.word, e.topic}] -= e.delta;
    for (const auto& [key, d] : diff)
      if (d != 0) out[c].entries.push_back({key.first, key.second, d});
  }
  return out;
}

}  // namespace peacock
