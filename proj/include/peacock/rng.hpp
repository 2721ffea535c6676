#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace peacock {

/// Seedable, splittable generator. Every consumer of randomness owns one of
/// these; there is no global generator. The full engine state round-trips
/// through `state()` / `restore()` so checkpoints can resume a stream exactly.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  /// Independent child stream; deterministic in (parent seed, stream, id).
  Rng split(std::uint64_t id) const;

  result_type operator()() { return engine_(); }
  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

  std::string state() const;
  void restore(const std::string& state);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace peacock
