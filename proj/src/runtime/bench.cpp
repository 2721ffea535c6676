#include "peacock/runtime/bench.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "peacock/rng.hpp"
#include "peacock/runtime/servers.hpp"

namespace peacock {

namespace {

struct Workload {
  WordTopicCounts counts;
  std::vector<WireToken> tokens;
};

Workload make_workload(const BenchOptions& o) {
  Rng rng(o.seed, 0x62656e63);
  Workload w{WordTopicCounts(o.vocab, o.topics), {}};
  w.tokens.reserve(o.tokens);
  for (std::uint64_t i = 0; i < o.tokens; ++i) {
    // Zipf-ish word draw keeps rows sparse in the tail.
    const double u = rng.uniform();
    const auto v = static_cast<WordId>(std::min<double>(o.vocab - 1, u * u * o.vocab));
    const auto k = static_cast<TopicId>(rng.below(o.topics));
    w.tokens.push_back({static_cast<std::uint32_t>(i / o.doc_length), v, k});
    w.counts.increment(v, k);
  }
  return w;
}

// Child side: serve one connection, then exit without unwinding the parent's state.
[[noreturn]] void run_child(int fd, const Workload& w, const BenchOptions& o) {
  int code = 0;
  try {
    SamplingServer server(0, w.counts, std::vector<std::uint8_t>(o.vocab, 1),
                          Hyperparameters::symmetric(o.topics, 0.1, 0.01), o.vocab, Rng(o.seed, 0x73727672));
    serve_connection(fd, server);
  } catch (...) {
    code = 3;
  }
  ::_exit(code);
}

}  // namespace

std::vector<BenchRow> bench_pipeline(const BenchOptions& o) {
  if (o.budget == 0 || o.sweep.empty()) throw std::invalid_argument("bench: budget and sweep must be non-empty");
  if (o.vocab == 0 || o.topics == 0 || o.doc_length == 0) throw std::invalid_argument("bench: empty workload");
  const Workload w = make_workload(o);
  std::vector<BenchRow> rows;
  for (std::uint32_t T : o.sweep) {
    if (T == 0) throw std::invalid_argument("bench: T must be >= 1");
    const std::uint64_t L = std::max<std::uint64_t>(1, o.budget / T);
    const std::size_t per_package = std::max<std::uint64_t>(1, L / kWireTokenBytes);

    std::vector<PackageRequest> packages;
    for (std::size_t i = 0; i < w.tokens.size(); i += per_package) {
      const auto end = std::min(w.tokens.size(), i + per_package);
      packages.push_back({0, static_cast<std::uint32_t>(packages.size()),
                          std::vector<WireToken>(w.tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                                 w.tokens.begin() + static_cast<std::ptrdiff_t>(end))});
    }

    const auto [client, server] = make_socket_pair();
    const pid_t pid = ::fork();
    if (pid < 0) {
      ::close(client);
      ::close(server);
      throw std::runtime_error("bench: fork failed");
    }
    if (pid == 0) {
      ::close(client);
      run_child(server, w, o);
    }
    ::close(server);

    BenchRow row{T, L, 0.0, packages.size()};
    {
      SocketChannel channel(client, o.link);
      PipelineOptions opts;
      opts.T = T;
      opts.timeout = o.timeout;
      const auto t0 = std::chrono::steady_clock::now();
      run_pipeline(packages, channel, opts, [](std::size_t, const PackageResponse&) {});
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      call(channel, Shutdown{}, o.timeout);
    }
    int status = 0;
    ::waitpid(pid, &status, 0);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) throw TransportError("bench: server process failed");
    rows.push_back(row);
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "T,L,seconds\n";
  for (const auto& r : rows) out << r.T << ',' << r.L << ',' << r.seconds << '\n';
}

}  // namespace peacock
