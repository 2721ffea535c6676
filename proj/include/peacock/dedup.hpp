#pragma once

#include <span>
#include <vector>

#include "peacock/lda.hpp"

namespace peacock {

/// L1 distance between two topic-word distributions, in [0, 2]. Throws
/// std::invalid_argument when either input is not normalized (|sum - 1| > 1e-6)
/// or the lengths differ.
double l1_distance(std::span<const double> a, std::span<const double> b);

struct DedupOptions {
  /// Pairs of topics whose L1 distance is below this are joined.
  double threshold = 0.5;
  /// With more than `prefilter_min_topics` topics, pairs whose top
  /// `prefilter_top` words are disjoint are not compared.
  std::size_t prefilter_top = 50;
  std::size_t prefilter_min_topics = 1000;
};

struct DedupResult {
  /// Clusters ordered by their smallest member; cluster i becomes topic i.
  std::vector<std::vector<TopicId>> clusters;
  /// old topic -> new topic.
  std::vector<TopicId> remap;
  WordTopicCounts counts;
  Hyperparameters hyper;
};

/// Single-linkage clustering of topics under normalized-phi L1 distance.
/// Members of a cluster are merged by summing their counts and their alpha.
DedupResult cluster_topics(const WordTopicCounts& counts, const Hyperparameters& hyper, std::size_t vocab_size,
                           const DedupOptions& options);

/// Pairwise L1 distances of all phi columns (K x K, row-major), computed
/// from the sparse counts.
std::vector<double> topic_distances(const WordTopicCounts& counts, double beta, std::size_t vocab_size);

WordTopicCounts remap_topics(const WordTopicCounts& counts, std::span<const TopicId> remap, std::size_t new_topics);
void remap_assignments(std::span<TopicId> z, std::span<const TopicId> remap);

}  // namespace peacock
