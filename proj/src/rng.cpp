#include "peacock/rng.hpp"

#include <sstream>

#include "peacock/types.hpp"

namespace peacock {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x50434B31u};
  return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

Rng Rng::split(std::uint64_t id) const {
  // Child stream ids are mixed so that split(a).split(b) != split(b).split(a).
  std::uint64_t mixed = stream_ * 0x9E3779B97F4A7C15ull + id + 1;
  mixed ^= mixed >> 31;
  return Rng(seed_, mixed);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: empty range");
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = max() - (max() % n);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

std::string Rng::state() const {
  std::ostringstream out;
  out << seed_ << ' ' << stream_ << ' ' << engine_;
  return out.str();
}

void Rng::restore(const std::string& state) {
  std::istringstream in(state);
  in >> seed_ >> stream_ >> engine_;
  if (!in) throw DataError("corrupt RNG state");
}

}  // namespace peacock
