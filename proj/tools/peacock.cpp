#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "peacock/corpus.hpp"
#include "peacock/dedup.hpp"
#include "peacock/eval.hpp"
#include "peacock/log.hpp"
#include "peacock/predictor.hpp"
#include "peacock/runtime/bench.hpp"
#include "peacock/runtime/checkpoint.hpp"
#include "peacock/runtime/cluster.hpp"
#include "peacock/runtime/config.hpp"

namespace fs = std::filesystem;
using namespace peacock;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

struct LoadedCorpus {
  Vocabulary vocab;
  std::vector<Document> docs;
};

// With no vocabulary file the corpus is taken as already filtered: every
// distinct word is kept.
LoadedCorpus load_corpus(const std::string& path, std::string vocab_path, JsonLogger& log) {
  if (vocab_path.empty() && fs::exists(path + ".vocab")) vocab_path = path + ".vocab";
  auto in = open_in(path);
  LoadedCorpus c;
  if (!vocab_path.empty()) {
    auto vin = open_in(vocab_path);
    c.vocab = Vocabulary::read(vin);
    std::size_t unknown = 0;
    c.docs = read_corpus(in, c.vocab, &unknown);
    log.event("corpus", {{"path", path}, {"vocab", vocab_path}, {"docs", c.docs.size()}, {"unknown_tokens", unknown}});
  } else {
    PreprocessConfig pc;
    pc.min_freq = 1;
    pc.max_freq = std::numeric_limits<Count>::max();
    auto p = preprocess(in, pc);
    c.vocab = std::move(p.vocab);
    c.docs = std::move(p.docs);
    log.event("corpus", {{"path", path}, {"vocab", nullptr}, {"docs", c.docs.size()}, {"words", c.vocab.size()}});
  }
  return c;
}

struct PreprocessArgs {
  std::string in, out, vocab;
  Count min_freq = 5;
  std::string max_freq;
};

int run_preprocess(const PreprocessArgs& a, JsonLogger& log) {
  PreprocessConfig pc;
  pc.min_freq = a.min_freq;
  if (!a.max_freq.empty()) {
    const double v = std::stod(a.max_freq);
    if (!(v > 0.0)) throw std::invalid_argument("--max-freq must be positive");
    if (v < 1.0) {
      pc.max_freq_fraction = v;
    } else {
      pc.max_freq = static_cast<Count>(v);
    }
  }
  auto in = open_in(a.in);
  const auto result = preprocess(in, pc);
  auto out = open_out(a.out);
  write_corpus(out, result.docs, result.vocab);
  const std::string vocab_path = a.vocab.empty() ? a.out + ".vocab" : a.vocab;
  auto vout = open_out(vocab_path);
  result.vocab.write(vout);
  const auto& r = result.report;
  log.event("preprocess", {{"lines", r.lines_read},
                           {"malformed_lines", r.malformed_lines},
                           {"tokens_read", r.tokens_read},
                           {"low_freq_words", r.low_freq_words},
                           {"high_freq_words", r.high_freq_words},
                           {"duplicate_docs", r.duplicate_docs},
                           {"short_docs", r.short_docs},
                           {"rounds", r.rounds},
                           {"docs", result.docs.size()},
                           {"vocab", result.vocab.size()}});
  return 0;
}

struct TrainArgs {
  std::string corpus, vocab, config, out_ckpt, resume;
  std::vector<std::string> settings;
  std::optional<std::uint32_t> C, M, K;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  int iters = 10;
  int every_ckpt = 0;
  int crash_after = 0;
};

int run_train(const TrainArgs& a, JsonLogger& log) {
  ClusterConfig cfg;
  if (!a.config.empty()) {
    auto in = open_in(a.config);
    cfg = parse_config(in);
  }
  for (const auto& s : a.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw DataError("--set expects key=value, got '" + s + "'");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (a.C) cfg.C = *a.C;
  if (a.M) cfg.M = *a.M;
  if (a.K) cfg.K = *a.K;
  if (a.seed) cfg.seed = *a.seed;
  if (a.mode) apply_setting(cfg, "mode", *a.mode);
  cfg.validate();
  log.event("config", {{"settings", format_config(cfg)}});

  auto corpus = load_corpus(a.corpus, a.vocab, log);
  std::unique_ptr<Cluster> cluster;
  if (!a.resume.empty()) {
    const auto state = load_checkpoint(a.resume);
    cluster = std::make_unique<Cluster>(std::move(corpus.docs), std::move(corpus.vocab), cfg, state, &log);
  } else {
    cluster = std::make_unique<Cluster>(std::move(corpus.docs), std::move(corpus.vocab), cfg, &log);
  }

  auto save = [&] {
    if (a.out_ckpt.empty()) return;
    save_checkpoint(cluster->state(), a.out_ckpt);
    log.event("checkpoint", {{"path", a.out_ckpt}, {"iteration", cluster->iteration()}});
  };
  for (int i = 1; i <= a.iters; ++i) {
    cluster->run_iteration();
    if (a.every_ckpt > 0 && cluster->iteration() % a.every_ckpt == 0) save();
    if (a.crash_after > 0 && i == a.crash_after) {
      log.event("crash", {{"iteration", cluster->iteration()}});
      std::_Exit(3);
    }
  }
  save();
  log.event("done", {{"iteration", cluster->iteration()}});
  return 0;
}

TopicModel load_model(const std::string& path) { return model_from_state(load_checkpoint(path)); }

struct PredictArgs {
  std::string model, in;
  std::size_t top_n = 30;
  bool theta = false;
  int sweeps = 10;
  int trials = 4;
  std::uint64_t seed = 0;
};

int run_predict(const PredictArgs& a, JsonLogger& log) {
  const auto tm = load_model(a.model);
  const FrozenModel model(tm);
  const auto r = build_r_matrix(model);
  const RtLdaPredictor predictor(model, r);

  std::size_t unknown = 0;
  std::vector<Document> docs;
  if (a.in.empty() || a.in == "-") {
    docs = read_corpus(std::cin, tm.vocab, &unknown);
  } else {
    auto in = open_in(a.in);
    docs = read_corpus(in, tm.vocab, &unknown);
  }
  PredictOptions opts{a.sweeps, a.trials, a.seed};
  std::size_t prior_only = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto p = predictor.predict(docs[d].tokens, opts);
    if (p.prior_only) ++prior_only;
    std::cout << d;
    if (a.theta) {
      // Topics above their prior-only share, i.e. topics some token chose.
      const double asum = model.hyper().alpha_sum();
      const double denom = static_cast<double>(p.known_tokens) + asum;
      std::vector<std::pair<TopicId, double>> entries;
      for (std::size_t k = 0; k < p.theta.size(); ++k) {
        if (p.theta[k] > model.hyper().alpha[k] / denom * (1.0 + 1e-9)) entries.emplace_back(k, p.theta[k]);
      }
      std::sort(entries.begin(), entries.end(),
                [](const auto& x, const auto& y) { return x.second != y.second ? x.second > y.second : x.first < y.first; });
      for (const auto& [k, v] : entries) std::cout << '\t' << k << ':' << v;
    } else {
      for (const auto& [v, prob] : extract_features(p.theta, model, a.top_n)) {
        std::cout << '\t' << tm.vocab[v].word << ':' << prob;
      }
    }
    std::cout << '\n';
  }
  log.event("predict", {{"docs", docs.size()}, {"unknown_tokens", unknown}, {"prior_only_docs", prior_only}});
  return 0;
}

struct DedupArgs {
  std::string model, out, remap;
  double threshold = 0.5;
};

int run_dedup(const DedupArgs& a, JsonLogger& log) {
  const auto state = load_checkpoint(a.model);
  const auto counts = merged_counts(state);
  DedupOptions opts;
  opts.threshold = a.threshold;
  const auto result = cluster_topics(counts, state.hyper, state.vocab.size(), opts);
  const auto merged = remap_state(state, result.remap, result.clusters.size(), result.hyper);
  save_checkpoint(merged, a.out);
  const std::string remap_path = a.remap.empty() ? a.out + ".remap" : a.remap;
  auto out = open_out(remap_path);
  for (std::size_t k = 0; k < result.remap.size(); ++k) out << k << '\t' << result.remap[k] << '\n';
  log.event("dedup", {{"topics_before", counts.num_topics()},
                      {"topics_after", result.clusters.size()},
                      {"threshold", a.threshold},
                      {"out", a.out},
                      {"remap", remap_path}});
  return 0;
}

struct EvalArgs {
  std::string model, heldout, reference, metric = "perplexity", csv;
  double ratio = 0.8;
  int sweeps = 100;
  int burn_in = 50;
  std::uint64_t seed = 0;
  std::size_t top_n = 10;
};

int run_eval(const EvalArgs& a, JsonLogger& log) {
  const auto tm = load_model(a.model);
  const FrozenModel model(tm);
  std::size_t unknown = 0;
  auto hin = open_in(a.heldout);
  const auto heldout = read_corpus(hin, tm.vocab, &unknown);

  std::ofstream file;
  if (!a.csv.empty()) file = open_out(a.csv);
  std::ostream& out = a.csv.empty() ? std::cout : file;

  if (a.metric == "perplexity") {
    PerplexityOptions opts;
    opts.observed_ratio = a.ratio;
    opts.sampling = SamplingOptions{a.sweeps, a.burn_in, a.seed};
    const auto r = predictive_perplexity(model, heldout, opts);
    out << "metric,value\n"
        << "perplexity," << r.perplexity << '\n'
        << "mean_loglik," << r.mean_log_likelihood() << '\n';
    log.event("eval", {{"metric", "perplexity"},
                       {"perplexity", r.perplexity},
                       {"scored_tokens", r.scored_tokens},
                       {"scored_docs", r.scored_docs},
                       {"skipped_docs", r.skipped_docs},
                       {"unknown_tokens", unknown}});
  } else {
    std::vector<Document> reference;
    if (a.reference.empty()) {
      reference = heldout;
    } else {
      auto rin = open_in(a.reference);
      reference = read_corpus(rin, tm.vocab);
    }
    const CooccurrenceIndex index(reference, tm.vocab.size());
    const auto scores = topic_coherence(model, index, a.top_n);
    write_pmi_csv(out, scores);
    double sum = 0.0;
    std::size_t n = 0;
    for (double s : scores)
      if (!std::isnan(s)) sum += s, ++n;
    log.event("eval", {{"metric", "pmi"}, {"topics", scores.size()}, {"mean_pmi", n ? sum / n : 0.0}});
  }
  return 0;
}

struct BenchArgs {
  std::uint64_t budget = 65536;
  std::vector<std::uint32_t> sweep{1, 8, 64, 512, 4096};
  std::uint64_t tokens = 60000;
  double bandwidth = 50e6;
  std::int64_t latency_us = 200;
  std::uint64_t seed = 1;
};

int run_bench(const BenchArgs& a, JsonLogger& log) {
  BenchOptions o;
  o.budget = a.budget;
  o.sweep = a.sweep;
  o.tokens = a.tokens;
  o.link = LinkModel{a.bandwidth, std::chrono::microseconds(a.latency_us)};
  o.seed = a.seed;
  const auto rows = bench_pipeline(o);
  write_bench_csv(std::cout, rows);
  for (const auto& r : rows) log.event("bench", {{"T", r.T}, {"L", r.L}, {"seconds", r.seconds}, {"packages", r.packages}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse LDA training on a simulated parameter-server cluster"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "Tokenize and filter a one-document-per-line corpus");
  p->add_option("--in", pre.in, "raw text")->required();
  p->add_option("--out", pre.out, "filtered corpus")->required();
  p->add_option("--vocab", pre.vocab, "vocabulary output (default: <out>.vocab)");
  p->add_option("--min-freq", pre.min_freq, "drop words seen fewer times")->capture_default_str();
  p->add_option("--max-freq", pre.max_freq, "drop words seen more often: a count, or a fraction of D below 1");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train or resume a model");
  t->add_option("--corpus", tr.corpus, "corpus file")->required();
  t->add_option("--vocab", tr.vocab, "vocabulary (default: <corpus>.vocab when present)");
  t->add_option("--config", tr.config, "key=value settings file");
  t->add_option("--set", tr.settings, "override one setting, key=value");
  t->add_option("-C", tr.C, "configurations");
  t->add_option("-M", tr.M, "word shards per configuration");
  t->add_option("-K", tr.K, "topics");
  t->add_option("--seed", tr.seed, "random seed");
  t->add_option("--mode", tr.mode, "deterministic or threaded");
  t->add_option("--out-ckpt", tr.out_ckpt, "checkpoint to write");
  t->add_option("--iters", tr.iters, "iterations to run (additional ones when resuming)")->capture_default_str();
  t->add_option("--every-ckpt", tr.every_ckpt, "also write the checkpoint every N iterations");
  t->add_option("--resume", tr.resume, "checkpoint to resume from");
  t->add_option("--crash-after", tr.crash_after)->group("");

  PredictArgs pr;
  auto* pd = app.add_subcommand("predict", "Topic features of new documents");
  pd->add_option("--model", pr.model, "checkpoint")->required();
  pd->add_option("--in", pr.in, "documents, one per line (default: stdin)");
  pd->add_option("--top-n", pr.top_n, "features per document")->capture_default_str();
  pd->add_flag("--theta", pr.theta, "emit sparse theta instead of word features");
  pd->add_option("--sweeps", pr.sweeps)->capture_default_str();
  pd->add_option("--trials", pr.trials)->capture_default_str();
  pd->add_option("--seed", pr.seed)->capture_default_str();

  DedupArgs dd;
  auto* d = app.add_subcommand("dedup", "Merge near-duplicate topics");
  d->add_option("--model", dd.model, "input checkpoint")->required();
  d->add_option("--out", dd.out, "output checkpoint")->required();
  d->add_option("--threshold", dd.threshold, "L1 distance below which topics merge")->capture_default_str();
  d->add_option("--remap", dd.remap, "remap table output (default: <out>.remap)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a model");
  e->add_option("--model", ev.model, "checkpoint")->required();
  e->add_option("--heldout", ev.heldout, "held-out documents")->required();
  e->add_option("--metric", ev.metric)->check(CLI::IsMember({"perplexity", "pmi"}))->capture_default_str();
  e->add_option("--reference", ev.reference, "co-occurrence corpus for pmi (default: the held-out file)");
  e->add_option("--ratio", ev.ratio, "observed share of each document")->capture_default_str();
  e->add_option("--sweeps", ev.sweeps)->capture_default_str();
  e->add_option("--burn-in", ev.burn_in)->capture_default_str();
  e->add_option("--seed", ev.seed)->capture_default_str();
  e->add_option("--top-n", ev.top_n, "top words per topic for pmi")->capture_default_str();
  e->add_option("--csv", ev.csv, "write results here instead of stdout");

  BenchArgs bn;
  auto* b = app.add_subcommand("bench-pipeline", "Time the package pipeline over T at a fixed T*L budget");
  b->add_option("--budget", bn.budget, "T * L in bytes")->capture_default_str();
  b->add_option("--sweep", bn.sweep, "T values")->delimiter(',');
  b->add_option("--tokens", bn.tokens, "tokens streamed per run")->capture_default_str();
  b->add_option("--bandwidth", bn.bandwidth, "emulated bytes per second, 0 for none")->capture_default_str();
  b->add_option("--latency-us", bn.latency_us, "emulated one-way latency")->capture_default_str();
  b->add_option("--seed", bn.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : kUsageError;
  }

  JsonLogger log(&std::cerr);
  auto fail = [&](int code, const char* cause, const std::string& what) {
    log.event("error", {{"cause", cause}, {"message", what}});
    std::cerr << "error: " << what << '\n';
    return code;
  };
  try {
    if (*p) return run_preprocess(pre, log);
    if (*t) return run_train(tr, log);
    if (*pd) return run_predict(pr, log);
    if (*d) return run_dedup(dd, log);
    if (*e) return run_eval(ev, log);
    if (*b) return run_bench(bn, log);
  } catch (const ChecksumError& x) {
    return fail(kDataError, "checksum", x.what());
  } catch (const TopologyMismatch& x) {
    return fail(kDataError, "topology", x.what());
  } catch (const DataError& x) {
    return fail(kDataError, "data", x.what());
  } catch (const std::invalid_argument& x) {
    return fail(kUsageError, "usage", x.what());
  } catch (const std::exception& x) {
    return fail(kDataError, "runtime", x.what());
  }
  return kUsageError;
}
