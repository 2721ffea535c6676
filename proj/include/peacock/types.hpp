#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace peacock {

using WordId = std::uint32_t;
using TopicId = std::uint32_t;
using DocId = std::uint32_t;
using Count = std::uint64_t;

/// Malformed or inconsistent input data, models or checkpoints.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A checkpoint whose trailing checksum does not match its contents.
class ChecksumError : public DataError {
 public:
  using DataError::DataError;
};

/// A checkpoint written by a different cluster topology or corpus.
class TopologyMismatch : public DataError {
 public:
  using DataError::DataError;
};

/// Broken internal invariant (count conservation, stale sampler caches).
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Package transport gave up after exhausting retransmissions.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by a worker when fault injection fires; caught by the coordinator.
class WorkerFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace peacock
