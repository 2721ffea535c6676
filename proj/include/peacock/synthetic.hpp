#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "peacock/corpus.hpp"
#include "peacock/rng.hpp"

namespace peacock {

/// Parameters of a corpus drawn from the LDA generative process.
struct SyntheticSpec {
  std::size_t docs = 1000;
  std::size_t vocab = 500;
  std::size_t topics = 20;
  double mean_length = 50.0;
  std::size_t min_length = 2;
  /// Document-topic prior; empty means symmetric 0.1.
  std::vector<double> alpha;
  /// Symmetric topic-word prior used to draw the true phi.
  double beta = 0.05;
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  Vocabulary vocab;  // words "w0".."w{V-1}", frequencies from the drawn tokens
  std::vector<Document> docs;
  std::vector<std::vector<double>> phi;    // K x V
  std::vector<std::vector<double>> theta;  // D x K
};

std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng);

SyntheticCorpus generate_corpus(const SyntheticSpec& spec);

}  // namespace peacock
