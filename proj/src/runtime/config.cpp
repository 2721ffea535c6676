#include "peacock/runtime/config.hpp"

#include <charconv>
#include <istream>
#include <sstream>

#include "peacock/types.hpp"

namespace peacock {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw DataError("config: bad value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

}  // namespace

void ClusterConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw DataError(std::string("config: ") + what);
  };
  require(C >= 1, "C must be at least 1");
  require(M >= 1, "M must be at least 1");
  require(K >= 1, "K must be at least 1");
  require(sync_period >= 1, "sync_period must be at least 1");
  require(pipeline.T >= 1, "T must be at least 1");
  require(pipeline.L >= 1, "L must be at least 1");
  require(alpha_init >= 0.0, "alpha_init must be positive (or 0 for 50/K)");
  require(beta > 0.0, "beta must be positive");
  require(data_segments >= 1, "data_segments must be at least 1");
  require(alpha_iters >= 0, "alpha_iters must be non-negative");
  require(timeout_ms >= 1, "timeout_ms must be positive");
}

void apply_setting(ClusterConfig& c, std::string_view key, std::string_view value) {
  if (key == "C") {
    c.C = parse_number<std::uint32_t>(key, value);
  } else if (key == "M") {
    c.M = parse_number<std::uint32_t>(key, value);
  } else if (key == "K") {
    c.K = parse_number<std::uint32_t>(key, value);
  } else if (key == "sync_period") {
    c.sync_period = parse_number<std::uint32_t>(key, value);
  } else if (key == "T") {
    c.pipeline.T = parse_number<std::uint32_t>(key, value);
  } else if (key == "L") {
    c.pipeline.L = parse_number<std::uint32_t>(key, value);
  } else if (key == "alpha_init") {
    c.alpha_init = parse_number<double>(key, value);
  } else if (key == "beta") {
    c.beta = parse_number<double>(key, value);
  } else if (key == "seed" || key == "seeds") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "mode") {
    if (value == "deterministic") {
      c.mode = RunMode::deterministic;
    } else if (value == "threaded") {
      c.mode = RunMode::threaded;
    } else {
      throw DataError("config: mode must be deterministic or threaded");
    }
  } else if (key == "granularity") {
    if (value == "per_diagonal" || value == "diagonal") {
      c.granularity = PsiGranularity::per_diagonal;
    } else if (value == "per_segment" || value == "segment") {
      c.granularity = PsiGranularity::per_segment;
    } else {
      throw DataError("config: granularity must be per_diagonal or per_segment");
    }
  } else if (key == "data_segments") {
    c.data_segments = parse_number<std::uint32_t>(key, value);
  } else if (key == "alpha_iters") {
    c.alpha_iters = parse_number<int>(key, value);
  } else if (key == "optimize_alpha") {
    if (value == "true" || value == "1") {
      c.optimize_alpha = true;
    } else if (value == "false" || value == "0") {
      c.optimize_alpha = false;
    } else {
      throw DataError("config: optimize_alpha must be true or false");
    }
  } else if (key == "timeout_ms") {
    c.timeout_ms = parse_number<std::uint32_t>(key, value);
  } else {
    throw DataError("config: unknown key '" + std::string(key) + "'");
  }
}

ClusterConfig parse_config(std::istream& in, ClusterConfig base) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw DataError("config line " + std::to_string(lineno) + ": expected key=value");
    apply_setting(base, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  base.validate();
  return base;
}

std::string format_config(const ClusterConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "C=" << c.C << "\nM=" << c.M << "\nK=" << c.K << "\nsync_period=" << c.sync_period << "\nT=" << c.pipeline.T
      << "\nL=" << c.pipeline.L << "\nalpha_init=" << c.alpha_init << "\nbeta=" << c.beta << "\nseed=" << c.seed
      << "\nmode=" << (c.mode == RunMode::deterministic ? "deterministic" : "threaded")
      << "\ngranularity=" << (c.granularity == PsiGranularity::per_diagonal ? "per_diagonal" : "per_segment")
      << "\ndata_segments=" << c.data_segments << "\nalpha_iters=" << c.alpha_iters
      << "\noptimize_alpha=" << (c.optimize_alpha ? "true" : "false") << "\ntimeout_ms=" << c.timeout_ms << '\n';
  return out.str();
}

}  // namespace peacock
