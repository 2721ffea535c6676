#include "peacock/dedup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace peacock {

double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("l1_distance: length mismatch");
  double sa = 0.0, sb = 0.0, d = 0.0;
  for (std::size_t v = 0; v < a.size(); ++v) {
    sa += a[v];
    sb += b[v];
    d += std::abs(a[v] - b[v]);
  }
  if (std::abs(sa - 1.0) > 1e-6 || std::abs(sb - 1.0) > 1e-6) {
    throw std::invalid_argument("l1_distance: inputs must be normalized distributions");
  }
  return d;
}

namespace {

struct Column {
  std::vector<std::pair<WordId, Count>> entries;  // sorted by word
  double inv_denominator = 0.0;
};

std::vector<Column> transpose(const WordTopicCounts& counts, double beta, std::size_t vocab_size) {
  const std::size_t K = counts.num_topics();
  std::vector<Column> cols(K);
  const double vbeta = static_cast<double>(vocab_size) * beta;
  for (std::size_t k = 0; k < K; ++k) {
    cols[k].inv_denominator = 1.0 / (static_cast<double>(counts.total(static_cast<TopicId>(k))) + vbeta);
  }
  for (std::size_t v = 0; v < counts.num_words(); ++v) {
    for (const auto& e : counts.row(static_cast<WordId>(v)).entries()) {
      cols[e.topic].entries.emplace_back(static_cast<WordId>(v), e.count);
    }
  }
  return cols;
}

double column_distance(const Column& a, const Column& b, double beta, std::size_t vocab_size) {
  std::size_t i = 0, j = 0, union_size = 0;
  double d = 0.0;
  while (i < a.entries.size() || j < b.entries.size()) {
    double ca = 0.0, cb = 0.0;
    if (j == b.entries.size() || (i < a.entries.size() && a.entries[i].first < b.entries[j].first)) {
      ca = static_cast<double>(a.entries[i++].second);
    } else if (i == a.entries.size() || b.entries[j].first < a.entries[i].first) {
      cb = static_cast<double>(b.entries[j++].second);
    } else {
      ca = static_cast<double>(a.entries[i++].second);
      cb = static_cast<double>(b.entries[j++].second);
    }
    ++union_size;
    d += std::abs((ca + beta) * a.inv_denominator - (cb + beta) * b.inv_denominator);
  }
  d += static_cast<double>(vocab_size - union_size) * beta * std::abs(a.inv_denominator - b.inv_denominator);
  return d;
}

std::vector<WordId> top_words(const Column& c, std::size_t n) {
  // Larger count means larger phi within one column; ties by word id.
  std::vector<std::pair<WordId, Count>> e = c.entries;
  const std::size_t keep = std::min(n, e.size());
  std::partial_sort(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(keep), e.end(), [](const auto& x, const auto& y) {
    return x.second != y.second ? x.second > y.second : x.first < y.first;
  });
  std::vector<WordId> out;
  for (std::size_t i = 0; i < keep; ++i) out.push_back(e[i].first);
  std::sort(out.begin(), out.end());
  return out;
}

bool intersects(const std::vector<WordId>& a, const std::vector<WordId>& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return true;
    if (a[i] < b[j]) ++i; else ++j;
  }
  return false;
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::vector<double> topic_distances(const WordTopicCounts& counts, double beta, std::size_t vocab_size) {
  const auto cols = transpose(counts, beta, vocab_size);
  const std::size_t K = cols.size();
  std::vector<double> dist(K * K, 0.0);
  for (std::size_t a = 0; a < K; ++a) {
    for (std::size_t b = a + 1; b < K; ++b) {
      dist[a * K + b] = dist[b * K + a] = column_distance(cols[a], cols[b], beta, vocab_size);
    }
  }
  return dist;
}

WordTopicCounts remap_topics(const WordTopicCounts& counts, std::span<const TopicId> remap, std::size_t new_topics) {
  if (remap.size() != counts.num_topics()) throw std::invalid_argument("remap_topics: remap size mismatch");
  WordTopicCounts out(counts.num_words(), new_topics);
  for (std::size_t v = 0; v < counts.num_words(); ++v) {
    SparseCounts row;
    for (const auto& e : counts.row(static_cast<WordId>(v)).entries()) {
      if (remap[e.topic] >= new_topics) throw std::invalid_argument("remap_topics: target outside the new range");
      row.increment(remap[e.topic], e.count);
    }
    out.set_row(static_cast<WordId>(v), std::move(row));
  }
  std::vector<Count> totals(new_topics, 0);
  for (std::size_t k = 0; k < remap.size(); ++k) totals[remap[k]] += counts.total(static_cast<TopicId>(k));
  out.set_totals(std::move(totals));
  return out;
}

void remap_assignments(std::span<TopicId> z, std::span<const TopicId> remap) {
  for (auto& k : z) {
    if (k >= remap.size()) throw DataError("remap_assignments: label outside the remap table");
    k = remap[k];
  }
}

DedupResult cluster_topics(const WordTopicCounts& counts, const Hyperparameters& hyper, std::size_t vocab_size,
                           const DedupOptions& options) {
  if (!(options.threshold > 0.0 && options.threshold < 2.0)) {
    throw std::invalid_argument("cluster_topics: threshold must lie in (0, 2)");
  }
  const std::size_t K = counts.num_topics();
  if (hyper.num_topics() != K) throw std::invalid_argument("cluster_topics: alpha size mismatch");

  const auto cols = transpose(counts, hyper.beta, vocab_size);
  const bool prefilter = K > options.prefilter_min_topics;
  std::vector<std::vector<WordId>> tops;
  if (prefilter) {
    tops.reserve(K);
    for (const auto& c : cols) tops.push_back(top_words(c, options.prefilter_top));
  }

  DisjointSets sets(K);
  for (std::size_t a = 0; a < K; ++a) {
    for (std::size_t b = a + 1; b < K; ++b) {
      if (prefilter && !intersects(tops[a], tops[b])) continue;
      if (column_distance(cols[a], cols[b], hyper.beta, vocab_size) < options.threshold) sets.unite(a, b);
    }
  }

  DedupResult result;
  result.remap.assign(K, 0);
  std::vector<std::size_t> cluster_of_root(K, K);
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t root = sets.find(k);
    if (cluster_of_root[root] == K) {
      cluster_of_root[root] = result.clusters.size();
      result.clusters.emplace_back();
    }
    result.clusters[cluster_of_root[root]].push_back(static_cast<TopicId>(k));
    result.remap[k] = static_cast<TopicId>(cluster_of_root[root]);
  }

  const std::size_t new_k = result.clusters.size();
  result.counts = remap_topics(counts, result.remap, new_k);
  result.hyper.beta = hyper.beta;
  result.hyper.alpha.assign(new_k, 0.0);
  for (std::size_t k = 0; k < K; ++k) result.hyper.alpha[result.remap[k]] += hyper.alpha[k];
  return result;
}

}  // namespace peacock
