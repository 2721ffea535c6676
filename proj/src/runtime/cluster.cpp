#include "peacock/runtime/cluster.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <thread>

#include "peacock/hyperopt.hpp"
#include "peacock/runtime/checksum.hpp"
#include "peacock/runtime/sequential.hpp"
#include "peacock/runtime/servers.hpp"
#include "peacock/runtime/socket_link.hpp"
#include "peacock/runtime/transport.hpp"

namespace peacock {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class T>
T expect(Message reply, const char* what) {
  if (auto* v = std::get_if<T>(&reply)) return std::move(*v);
  throw TransportError(std::string("unexpected reply to ") + what);
}

}  // namespace

struct Cluster::Configuration {
  std::uint32_t index = 0;
  std::vector<std::unique_ptr<DataServer>> data;
  std::vector<std::unique_ptr<SamplingServer>> samplers;
  // Declared before the channels so the client ends close first and the
  // server threads see end of stream.
  std::vector<std::unique_ptr<SocketServerThread>> threads;
  std::vector<std::unique_ptr<Channel>> channels;
  std::vector<Count> psi;  // last Psi sent to every sampler

  // Indexed by (segment * rows + r) * M + m.
  std::vector<std::vector<std::uint32_t>> block_docs;
  std::vector<Count> block_tokens;
};

struct Cluster::BlockWork {
  Count tokens = 0;
  Count changed = 0;
  PipelineStats pipeline;
};

Cluster::Cluster(std::vector<Document> docs, Vocabulary vocab, ClusterConfig config, JsonLogger* log)
    : docs_(std::move(docs)), vocab_(std::move(vocab)), config_(config), log_(log) {
  partition();
  hyper_ = Hyperparameters::symmetric(config_.K, config_.initial_alpha(), config_.beta);

  const auto z = initial_assignments(docs_, config_.K, config_.seed);
  const std::size_t V = vocab_.size();
  WordTopicCounts global(V, config_.K);
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    for (std::size_t i = 0; i < z[d].size(); ++i) global.increment(docs_[d].tokens[i], z[d][i]);
  }
  global_psi_.assign(global.totals().begin(), global.totals().end());

  std::vector<WordTopicCounts> shards;
  for (std::uint32_t m = 0; m < config_.M; ++m) {
    WordTopicCounts shard(V, config_.K);
    for (std::size_t v = 0; v < V; ++v) {
      if (owned_[m][v]) shard.set_row(static_cast<WordId>(v), global.row(static_cast<WordId>(v)));
    }
    aggregators_.push_back(std::make_unique<AggregationServer>(shard, owned_[m]));
    shard.set_totals(global_psi_);
    shards.push_back(std::move(shard));
  }

  const std::uint32_t rows = config_.rows();
  for (std::uint32_t c = 0; c < config_.C; ++c) {
    ConfigState st;
    st.shards = shards;
    for (std::uint32_t r = 0; r < rows; ++r) {
      std::vector<std::vector<TopicId>> zr;
      for (DocId d : row_docs_[c * rows + r]) zr.push_back(z[d]);
      st.z.push_back(std::move(zr));
    }
    for (std::uint32_t m = 0; m < config_.M; ++m) st.rng.push_back(sampler_stream(config_.seed, c, m).state());
    restore_config(add_config(c), st);
  }
  take_snapshots();
  if (log_) log_->event("cluster_start", {{"C", config_.C}, {"M", config_.M}, {"K", config_.K},
                                          {"docs", docs_.size()}, {"tokens", total_tokens_}});
}

Cluster::Cluster(std::vector<Document> docs, Vocabulary vocab, ClusterConfig config, const ClusterState& state,
                 JsonLogger* log)
    : docs_(std::move(docs)), vocab_(std::move(vocab)), config_(config), log_(log) {
  partition();
  if (!(state.topology == topology_)) {
    throw TopologyMismatch("checkpoint topology differs from this run: " + topology_.differences(state.topology));
  }
  if (!(state.vocab == vocab_)) throw TopologyMismatch("checkpoint vocabulary differs from this run");
  if (state.hyper.num_topics() != config_.K || state.global_shards.size() != config_.M ||
      state.configs.size() != config_.C || state.psi.size() != config_.K) {
    throw DataError("checkpoint contents do not match its topology");
  }
  hyper_ = state.hyper;
  config_.beta = hyper_.beta;
  iteration_ = static_cast<int>(state.iteration);
  fresh_aggregate_ = iteration_ % static_cast<int>(config_.sync_period) == 0;
  global_psi_ = state.psi;
  for (std::uint32_t m = 0; m < config_.M; ++m) {
    aggregators_.push_back(std::make_unique<AggregationServer>(state.global_shards[m], owned_[m]));
  }
  for (std::uint32_t c = 0; c < config_.C; ++c) restore_config(add_config(c), state.configs[c]);
  take_snapshots();
  if (log_) log_->event("cluster_resume", {{"iteration", iteration_}});
}

Cluster::~Cluster() = default;

void Cluster::partition() {
  config_.validate();
  const std::uint32_t rows = config_.rows();
  if (vocab_.empty()) throw DataError("empty vocabulary");
  if (static_cast<std::size_t>(config_.C) * rows > docs_.size()) {
    throw DataError("corpus has " + std::to_string(docs_.size()) + " documents, fewer than the " +
                    std::to_string(config_.C * rows) + " data servers");
  }
  if (config_.M > vocab_.size()) throw DataError("more word shards than words");
  for (const auto& d : docs_) {
    for (WordId v : d.tokens)
      if (v >= vocab_.size()) throw DataError("document word id outside the vocabulary");
    total_tokens_ += d.tokens.size();
  }

  const auto grid = shuffle_and_partition(docs_, vocab_, config_.C * rows, config_.M, config_.seed);
  col_of_word_ = grid.col_of_word;
  row_docs_ = grid.row_docs;
  owned_.assign(config_.M, std::vector<std::uint8_t>(vocab_.size(), 0));
  for (std::size_t v = 0; v < vocab_.size(); ++v) owned_[col_of_word_[v]][v] = 1;

  Crc64 crc;
  crc.update(grid.row_of_doc.data(), grid.row_of_doc.size() * sizeof(std::uint32_t));
  crc.update(col_of_word_.data(), col_of_word_.size() * sizeof(std::uint32_t));
  for (const auto& d : docs_) {
    const std::uint64_t n = d.tokens.size();
    crc.update(&n, sizeof n);
    crc.update(d.tokens.data(), d.tokens.size() * sizeof(WordId));
  }
  topology_ = Topology{config_.C,
                       config_.M,
                       rows,
                       config_.K,
                       vocab_.size(),
                       docs_.size(),
                       total_tokens_,
                       static_cast<std::uint32_t>(config_.granularity),
                       config_.data_segments,
                       config_.sync_period,
                       crc.value()};
}

Cluster::Configuration& Cluster::add_config(std::uint32_t index) {
  auto cfg = std::make_unique<Configuration>();
  cfg->index = index;
  const std::uint32_t rows = config_.rows(), M = config_.M, S = config_.data_segments;
  cfg->block_docs.resize(static_cast<std::size_t>(S) * rows * M);
  cfg->block_tokens.assign(cfg->block_docs.size(), 0);
  for (std::uint32_t r = 0; r < rows; ++r) {
    const auto& local = row_docs_[index * rows + r];
    const std::size_t n = local.size();
    for (std::uint32_t s = 0; s < S; ++s) {
      const std::size_t lo = n * s / S, hi = n * (s + 1) / S;
      for (std::size_t i = lo; i < hi; ++i) {
        std::vector<Count> per_col(M, 0);
        for (WordId v : docs_[local[i]].tokens) ++per_col[col_of_word_[v]];
        for (std::uint32_t m = 0; m < M; ++m) {
          if (per_col[m] == 0) continue;
          const std::size_t b = (static_cast<std::size_t>(s) * rows + r) * M + m;
          cfg->block_docs[b].push_back(static_cast<std::uint32_t>(i));
          cfg->block_tokens[b] += per_col[m];
        }
      }
    }
  }
  configs_.push_back(std::move(cfg));
  return *configs_.back();
}

void Cluster::restore_config(Configuration& cfg, const ConfigState& st) {
  const std::uint32_t rows = config_.rows();
  if (st.shards.size() != config_.M || st.rng.size() != config_.M || st.z.size() != rows) {
    throw DataError("configuration state does not match the topology");
  }
  for (std::uint32_t r = 0; r < rows; ++r) {
    const auto& local = row_docs_[cfg.index * rows + r];
    if (st.z[r].size() != local.size()) throw DataError("data server state has the wrong document count");
    for (std::size_t i = 0; i < local.size(); ++i) {
      if (st.z[r][i].size() != docs_[local[i]].tokens.size()) throw DataError("label vector length mismatch");
      for (TopicId k : st.z[r][i])
        if (k >= config_.K) throw DataError("label outside [0, K)");
    }
  }
  for (const auto& s : st.shards) {
    if (s.num_words() != vocab_.size() || s.num_topics() != config_.K) throw DataError("shard has the wrong shape");
  }

  cfg.channels.clear();
  cfg.threads.clear();
  cfg.samplers.clear();
  cfg.data.clear();
  for (std::uint32_t r = 0; r < rows; ++r) {
    cfg.data.push_back(std::make_unique<DataServer>(r, row_docs_[cfg.index * rows + r], st.z[r]));
  }
  for (std::uint32_t m = 0; m < config_.M; ++m) {
    Rng rng;
    rng.restore(st.rng[m]);
    auto server = std::make_unique<SamplingServer>(m, st.shards[m], owned_[m], hyper_, vocab_.size(), std::move(rng));
    server->set_base(aggregators_[m]->global());
    cfg.samplers.push_back(std::move(server));
  }
  cfg.psi.assign(st.shards[0].totals().begin(), st.shards[0].totals().end());
  connect(cfg);
}

void Cluster::connect(Configuration& cfg) {
  for (auto& server : cfg.samplers) {
    if (config_.mode == RunMode::deterministic) {
      cfg.channels.push_back(std::make_unique<LoopbackChannel>(*server));
    } else {
      const auto [client, srv] = make_socket_pair();
      cfg.threads.push_back(std::make_unique<SocketServerThread>(srv, *server));
      cfg.channels.push_back(std::make_unique<SocketChannel>(client));
    }
  }
}

ConfigState Cluster::capture(const Configuration& cfg) const {
  ConfigState st;
  for (const auto& s : cfg.samplers) {
    st.shards.push_back(s->shard());
    st.rng.push_back(s->rng().state());
  }
  for (const auto& d : cfg.data) st.z.push_back(d->z());
  return st;
}

void Cluster::take_snapshots() {
  snapshots_.clear();
  for (const auto& cfg : configs_) snapshots_.push_back(capture(*cfg));
  snapshot_iteration_ = iteration_;
  alpha_history_.clear();
}

IterationReport Cluster::run_iteration() {
  IterationReport report;
  const int it = iteration_ + 1;
  report.iteration = it;
  alpha_history_.push_back(hyper_.alpha);
  fresh_aggregate_ = false;

  for (auto& cfg_ptr : configs_) {
    auto& cfg = *cfg_ptr;
    if (fault_ && fault_->config == cfg.index && fault_->iteration == it) {
      if (fault_->sampler >= cfg.samplers.size()) throw std::invalid_argument("fault plan names a missing sampler");
      cfg.samplers[fault_->sampler]->arm_failure(fault_->nth_package);
      fault_.reset();
    }
    IterationReport attempt;
    const auto t0 = Clock::now();
    try {
      run_config_iteration(cfg, it, attempt);
    } catch (const WorkerFailure& e) {
      if (log_) log_->event("worker_failure", {{"config", cfg.index}, {"iteration", it}, {"error", e.what()}});
      report.packages += attempt.packages;
      attempt = IterationReport{};
      recover(cfg, it, attempt);
      ++report.recoveries;
    } catch (const TransportError& e) {
      if (log_) log_->event("transport_failure", {{"config", cfg.index}, {"iteration", it}, {"error", e.what()}});
      report.packages += attempt.packages;
      attempt = IterationReport{};
      recover(cfg, it, attempt);
      ++report.recoveries;
    }
    report.tokens += attempt.tokens;
    report.changed += attempt.changed;
    report.packages += attempt.packages;
    report.retransmissions += attempt.retransmissions;
    report.max_in_flight = std::max(report.max_in_flight, attempt.max_in_flight);
    report.psi_syncs += attempt.psi_syncs;
    report.seconds.psi_sync += attempt.seconds.psi_sync;
    report.seconds.recovery += attempt.seconds.recovery;
    report.seconds.sampling += seconds_since(t0) - attempt.seconds.psi_sync - attempt.seconds.recovery;
  }

  if (config_.optimize_alpha) {
    const auto t0 = Clock::now();
    AlphaSufficientStats stats(config_.K);
    for (const auto& cfg : configs_)
      for (const auto& d : cfg->data) stats.merge(d->count_ntn(config_.K));
    hyper_.alpha = optimize_alpha(stats, hyper_.alpha, config_.alpha_iters);
    for (auto& cfg : configs_) broadcast_alpha(*cfg, hyper_.alpha);
    report.seconds.alpha = seconds_since(t0);
  }

  iteration_ = it;
  if (it % static_cast<int>(config_.sync_period) == 0) {
    const auto t0 = Clock::now();
    aggregate(report);
    take_snapshots();
    report.seconds.aggregation = seconds_since(t0);
  }
  if (log_) {
    log_->event("iteration", {{"iteration", it},
                              {"tokens", report.tokens},
                              {"changed", report.changed},
                              {"packages", report.packages},
                              {"retransmissions", report.retransmissions},
                              {"psi_syncs", report.psi_syncs},
                              {"aggregated", report.aggregated},
                              {"recoveries", report.recoveries},
                              {"sampling_s", report.seconds.sampling},
                              {"alpha_s", report.seconds.alpha},
                              {"aggregation_s", report.seconds.aggregation}});
  }
  return report;
}

void Cluster::recover(Configuration& cfg, int failed_iteration, IterationReport& report) {
  const auto t0 = Clock::now();
  restore_config(cfg, snapshots_[cfg.index]);
  IterationReport replay;
  for (int j = snapshot_iteration_ + 1; j < failed_iteration; ++j) {
    broadcast_alpha(cfg, alpha_history_[static_cast<std::size_t>(j - snapshot_iteration_ - 1)]);
    run_config_iteration(cfg, j, replay);
  }
  broadcast_alpha(cfg, alpha_history_.back());
  if (log_) {
    log_->event("recovered", {{"config", cfg.index},
                              {"from_iteration", snapshot_iteration_},
                              {"replayed", failed_iteration - snapshot_iteration_ - 1}});
  }
  report.seconds.recovery = seconds_since(t0);
  run_config_iteration(cfg, failed_iteration, report);
}

void Cluster::run_config_iteration(Configuration& cfg, int iteration, IterationReport& report) {
  const std::uint32_t rows = config_.rows(), M = config_.M;
  auto barrier = [&](std::uint32_t segment, std::uint32_t step) {
    const auto t0 = Clock::now();
    psi_sync(cfg, report);
    for (auto& d : cfg.data) d->commit();
    report.seconds.psi_sync += seconds_since(t0);
    if (observer_.on_barrier) observer_.on_barrier(*this, BarrierEvent{cfg.index, iteration, segment, step});
  };

  for (std::uint32_t s = 0; s < config_.data_segments; ++s) {
    if (config_.granularity == PsiGranularity::per_diagonal) {
      const auto diagonals = schedule_diagonals(M);
      for (std::uint32_t dig = 0; dig < M; ++dig) {
        std::vector<TimedBlock> blocks;
        for (const auto& b : diagonals[dig]) blocks.push_back({b, double(dig), double(dig + 1)});
        run_blocks(cfg, s, blocks, iteration, dig, true, report);
        barrier(s, dig);
      }
    } else {
      std::vector<Count> cost(static_cast<std::size_t>(rows) * M);
      for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t m = 0; m < M; ++m)
          cost[r * M + m] = cfg.block_tokens[(static_cast<std::size_t>(s) * rows + r) * M + m] + 1;
      const auto plan = plan_free_server_round(cost, rows, M);
      run_blocks(cfg, s, plan, iteration, 0, false, report);
      barrier(s, 0);
    }
  }
}

void Cluster::execute_block(Configuration& cfg, std::uint32_t segment, BlockPair block, BlockWork& work) {
  const std::uint32_t rows = config_.rows(), M = config_.M;
  const std::size_t b = (static_cast<std::size_t>(segment) * rows + block.row) * M + block.col;
  const auto& local = cfg.block_docs[b];
  if (local.empty()) return;
  auto& data = *cfg.data[block.row];
  auto packages = data.make_packages(local, docs_, col_of_word_, block.col, static_cast<std::uint32_t>(b),
                                     config_.pipeline.L);
  std::vector<PackageRequest> requests;
  requests.reserve(packages.size());
  for (auto& p : packages) requests.push_back(std::move(p.request));

  PipelineOptions opts;
  opts.T = config_.pipeline.T;
  opts.timeout = std::chrono::milliseconds(config_.timeout_ms);
  const auto stats = run_pipeline(requests, *cfg.channels[block.col], opts,
                                  [&](std::size_t i, const PackageResponse& resp) {
                                    data.apply_z_response(packages[i], resp);
                                    work.changed += resp.changes.size();
                                  });
  work.tokens += cfg.block_tokens[b];
  work.pipeline.packages += stats.packages;
  work.pipeline.retransmissions += stats.retransmissions;
  work.pipeline.max_in_flight = std::max(work.pipeline.max_in_flight, stats.max_in_flight);
}

void Cluster::run_blocks(Configuration& cfg, std::uint32_t segment, std::span<const TimedBlock> blocks,
                         int iteration, std::uint32_t first_step, bool diagonal, IterationReport& report) {
  const std::uint32_t rows = config_.rows(), M = config_.M;
  std::mutex observer_mutex;
  auto notify = [&](std::size_t i) {
    if (!observer_.on_block) return;
    const auto& tb = blocks[i];
    const std::size_t b = (static_cast<std::size_t>(segment) * rows + tb.block.row) * M + tb.block.col;
    BlockEvent ev{cfg.index,   iteration, segment, diagonal ? first_step : static_cast<std::uint32_t>(i),
                  tb.block,    tb.start,  tb.end,  cfg.block_tokens[b]};
    std::lock_guard lock(observer_mutex);
    observer_.on_block(ev);
  };
  auto merge = [&](const BlockWork& w) {
    report.tokens += w.tokens;
    report.changed += w.changed;
    report.packages += w.pipeline.packages;
    report.retransmissions += w.pipeline.retransmissions;
    report.max_in_flight = std::max(report.max_in_flight, w.pipeline.max_in_flight);
  };

  if (config_.mode == RunMode::deterministic) {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      notify(i);
      BlockWork w;
      try {
        execute_block(cfg, segment, blocks[i].block, w);
      } catch (...) {
        merge(w);
        throw;
      }
      merge(w);
    }
    return;
  }

  std::vector<BlockWork> work;
  std::vector<std::exception_ptr> errors;
  std::vector<std::thread> threads;
  std::vector<std::vector<std::size_t>> by_col(M);
  std::vector<std::vector<std::uint32_t>> row_order(rows);
  if (diagonal) {
    work.resize(blocks.size());
    errors.resize(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      threads.emplace_back([&, i] {
        try {
          notify(i);
          execute_block(cfg, segment, blocks[i].block, work[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
  } else {
    // Each sampling server works through its blocks in plan order; a data
    // server serves its sampling servers in plan order too.
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      by_col[blocks[i].block.col].push_back(i);
      row_order[blocks[i].block.row].push_back(blocks[i].block.col);
    }
    auto row_turn = std::make_shared<std::vector<std::size_t>>(rows, 0);
    auto mutex = std::make_shared<std::mutex>();
    auto cv = std::make_shared<std::condition_variable>();
    auto abort = std::make_shared<bool>(false);
    work.resize(M);
    errors.resize(M);
    for (std::uint32_t m = 0; m < M; ++m) {
      threads.emplace_back([&, m, row_turn, mutex, cv, abort] {
        try {
          for (std::size_t i : by_col[m]) {
            const auto r = blocks[i].block.row;
            {
              std::unique_lock lock(*mutex);
              cv->wait(lock, [&] { return *abort || row_order[r][(*row_turn)[r]] == m; });
              if (*abort) return;
            }
            notify(i);
            execute_block(cfg, segment, blocks[i].block, work[m]);
            {
              std::lock_guard lock(*mutex);
              ++(*row_turn)[r];
            }
            cv->notify_all();
          }
        } catch (...) {
          errors[m] = std::current_exception();
          {
            std::lock_guard lock(*mutex);
            *abort = true;
          }
          cv->notify_all();
        }
      });
    }
  }
  for (auto& t : threads) t.join();
  for (const auto& w : work) merge(w);
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void Cluster::psi_sync(Configuration& cfg, IterationReport& report) {
  const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
  const std::size_t K = config_.K;
  std::vector<std::int64_t> acc(cfg.psi.begin(), cfg.psi.end());
  for (auto& ch : cfg.channels) {
    const auto local = expect<PsiSync>(call(*ch, PsiRequest{}, timeout), "PsiRequest");
    if (local.psi.size() != K) throw DataError("sampler reported Psi of the wrong size");
    for (std::size_t k = 0; k < K; ++k) {
      acc[k] += static_cast<std::int64_t>(local.psi[k]) - static_cast<std::int64_t>(cfg.psi[k]);
    }
  }
  std::vector<Count> psi(K);
  for (std::size_t k = 0; k < K; ++k) {
    if (acc[k] < 0) throw ConsistencyError("Psi went negative during synchronization");
    psi[k] = static_cast<Count>(acc[k]);
  }
  for (auto& ch : cfg.channels) expect<Ack>(call(*ch, PsiSync{psi}, timeout), "PsiSync");
  cfg.psi = std::move(psi);
  ++report.psi_syncs;
}

void Cluster::broadcast_alpha(Configuration& cfg, const std::vector<double>& alpha) {
  const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
  for (auto& ch : cfg.channels) expect<Ack>(call(*ch, AlphaSync{alpha}, timeout), "AlphaSync");
}

void Cluster::aggregate(IterationReport& report) {
  const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
  for (std::uint32_t m = 0; m < config_.M; ++m) {
    std::vector<PhiDelta> deltas;
    for (auto& cfg : configs_) {
      deltas.push_back(expect<PhiDelta>(call(*cfg->channels[m], PhiDeltaRequest{}, timeout), "PhiDeltaRequest"));
    }
    auto outs = aggregators_[m]->aggregate(deltas);
    for (std::size_t c = 0; c < configs_.size(); ++c) {
      expect<Ack>(call(*configs_[c]->channels[m], std::move(outs[c]), timeout), "PhiDelta");
    }
  }
  std::vector<Count> psi(config_.K, 0);
  for (const auto& a : aggregators_)
    for (std::size_t k = 0; k < psi.size(); ++k) psi[k] += a->global().total(static_cast<TopicId>(k));
  global_psi_ = psi;
  for (auto& cfg : configs_) {
    for (auto& ch : cfg->channels) expect<Ack>(call(*ch, PsiSync{psi}, timeout), "PsiSync");
    cfg->psi = psi;
  }
  report.aggregated = true;
  fresh_aggregate_ = true;
  std::size_t clamped = 0;
  for (const auto& a : aggregators_) clamped += a->clamped_entries();
  if (log_) log_->event("aggregate", {{"iteration", iteration_}, {"clamped_entries", clamped}});
}

std::vector<std::vector<TopicId>> Cluster::assignments() const {
  std::vector<std::vector<TopicId>> z(docs_.size());
  for (const auto& cfg : configs_) {
    for (const auto& d : cfg->data) {
      const auto ids = d->docs();
      for (std::size_t i = 0; i < ids.size(); ++i) z[ids[i]] = d->z()[i];
    }
  }
  return z;
}

const WordTopicCounts& Cluster::sampler_shard(std::uint32_t config, std::uint32_t m) const {
  return configs_.at(config)->samplers.at(m)->shard();
}

TopicModel Cluster::model() const {
  WordTopicCounts counts(vocab_.size(), config_.K);
  if (config_.C == 1) {
    // Shards are exact here, so no label pass is needed.
    for (const auto& s : configs_[0]->samplers) {
      for (std::size_t v = 0; v < vocab_.size(); ++v) {
        if (owned_[s->index()][v]) counts.set_row(static_cast<WordId>(v), s->shard().row(static_cast<WordId>(v)));
      }
    }
    counts.set_totals(counts.column_sums());
  } else {
    const auto z = assignments();
    for (std::size_t d = 0; d < docs_.size(); ++d)
      for (std::size_t i = 0; i < z[d].size(); ++i) counts.increment(docs_[d].tokens[i], z[d][i]);
  }
  return TopicModel{std::move(counts), hyper_, vocab_};
}

FrozenModel Cluster::frozen_model() const { return FrozenModel(model()); }

ClusterState Cluster::state() const {
  ClusterState st;
  st.topology = topology_;
  st.iteration = static_cast<std::uint32_t>(iteration_);
  for (const auto& a : aggregators_) st.global_shards.push_back(a->global());
  st.psi = global_psi_;
  st.hyper = hyper_;
  for (const auto& cfg : configs_) st.configs.push_back(capture(*cfg));
  st.vocab = vocab_;
  return st;
}

void Cluster::verify_conservation() const {
  const std::size_t V = vocab_.size(), K = config_.K;
  for (const auto& cfg : configs_) {
    std::vector<Count> sums(K, 0);
    for (const auto& s : cfg->samplers) {
      const auto& shard = s->shard();
      for (std::size_t v = 0; v < V; ++v) {
        if (!owned_[s->index()][v] && !shard.row(static_cast<WordId>(v)).empty()) {
          throw ConsistencyError("sampler holds counts for a word outside its shard");
        }
      }
      const auto cs = shard.column_sums();
      for (std::size_t k = 0; k < K; ++k) sums[k] += cs[k];
    }
    Count total = 0;
    for (std::size_t k = 0; k < K; ++k) total += sums[k];
    if (total != total_tokens_) throw ConsistencyError("configuration shards do not total the corpus");
    for (const auto& s : cfg->samplers) {
      const auto t = s->shard().totals();
      if (!std::equal(t.begin(), t.end(), sums.begin(), sums.end())) {
        throw ConsistencyError("local Psi differs from the column sums of the shards");
      }
    }
    for (const auto& d : cfg->data) {
      const auto ids = d->docs();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (d->z()[i].size() != docs_[ids[i]].tokens.size()) throw ConsistencyError("label vector length mismatch");
        for (TopicId k : d->z()[i])
          if (k >= K) throw ConsistencyError("label outside [0, K)");
      }
    }
  }

  if (config_.C == 1 || fresh_aggregate_) {
    WordTopicCounts hist(V, K);
    const auto z = assignments();
    for (std::size_t d = 0; d < docs_.size(); ++d)
      for (std::size_t i = 0; i < z[d].size(); ++i) hist.increment(docs_[d].tokens[i], z[d][i]);
    for (const auto& cfg : configs_) {
      for (const auto& s : cfg->samplers) {
        for (std::size_t v = 0; v < V; ++v) {
          if (owned_[s->index()][v] && !(s->shard().row(static_cast<WordId>(v)) == hist.row(static_cast<WordId>(v)))) {
            throw ConsistencyError("shard counts differ from the label histogram");
          }
        }
      }
    }
  }
}

}  // namespace peacock
