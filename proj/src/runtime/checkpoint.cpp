#include "peacock/runtime/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "peacock/dedup.hpp"
#include "peacock/runtime/checksum.hpp"

namespace peacock {

namespace {

constexpr std::uint32_t kMagic = 0x50434B43;  // "CKCP" little-endian
constexpr std::uint32_t kVersion = 1;

enum Section : std::uint32_t {
  kTopology = 1,
  kGlobalShard = 2,
  kPsi = 3,
  kAlpha = 4,
  kBeta = 5,
  kConfigShard = 6,
  kZShard = 7,
  kRngState = 8,
  kVocabulary = 9,
};

class Out {
 public:
  std::vector<std::uint8_t> bytes;

  template <typename T>
  void put(T v) {
    std::uint64_t bits;
    if constexpr (std::is_floating_point_v<T>) {
      bits = std::bit_cast<std::uint64_t>(static_cast<double>(v));
    } else {
      bits = static_cast<std::uint64_t>(v);
    }
    constexpr std::size_t n = std::is_floating_point_v<T> ? 8 : sizeof(T);
    for (std::size_t i = 0; i < n; ++i) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint64_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  // Section tag and a length placeholder; returns the patch position.
  std::size_t open(Section tag) {
    put(static_cast<std::uint32_t>(tag));
    put(std::uint64_t{0});
    return bytes.size();
  }
  void close(std::size_t start) {
    const std::uint64_t len = bytes.size() - start;
    for (std::size_t i = 0; i < 8; ++i) bytes[start - 8 + i] = static_cast<std::uint8_t>(len >> (8 * i));
  }
};

class In {
 public:
  In(std::span<const std::uint8_t> b, const std::string& src) : bytes_(b), source_(src) {}

  template <typename T>
  T get() {
    constexpr std::size_t n = std::is_floating_point_v<T> ? 8 : sizeof(T);
    need(n);
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < n; ++i) bits |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += n;
    if constexpr (std::is_floating_point_v<T>) {
      return std::bit_cast<double>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }
  std::string get_string() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void need(std::uint64_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError(source_ + ": checkpoint section overruns its bounds");
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

void put_counts(Out& o, const WordTopicCounts& c) {
  o.put(static_cast<std::uint64_t>(c.num_words()));
  o.put(static_cast<std::uint32_t>(c.num_topics()));
  for (Count t : c.totals()) o.put(static_cast<std::uint64_t>(t));
  std::uint32_t rows = 0;
  for (std::size_t v = 0; v < c.num_words(); ++v) rows += !c.row(static_cast<WordId>(v)).empty();
  o.put(rows);
  for (std::size_t v = 0; v < c.num_words(); ++v) {
    const auto e = c.row(static_cast<WordId>(v)).entries();
    if (e.empty()) continue;
    o.put(static_cast<std::uint32_t>(v));
    o.put(static_cast<std::uint32_t>(e.size()));
    for (const auto& x : e) {
      o.put(x.topic);
      o.put(static_cast<std::uint64_t>(x.count));
    }
  }
}

WordTopicCounts get_counts(In& in, const std::string& source) {
  const auto V = in.get<std::uint64_t>();
  const auto K = in.get<std::uint32_t>();
  if (V > (1ull << 32)) throw DataError(source + ": implausible vocabulary size");
  WordTopicCounts c(V, K);
  std::vector<Count> totals(K);
  for (auto& t : totals) t = in.get<std::uint64_t>();
  const auto rows = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < rows; ++i) {
    const auto v = in.get<std::uint32_t>();
    const auto n = in.get<std::uint32_t>();
    if (v >= V) throw DataError(source + ": row for word outside the vocabulary");
    std::vector<TopicCount> entries(n);
    for (auto& e : entries) {
      e.topic = in.get<std::uint32_t>();
      e.count = in.get<std::uint64_t>();
      if (e.topic >= K) throw DataError(source + ": topic outside [0, K)");
    }
    SparseCounts row;
    try {
      row.assign(std::move(entries));
    } catch (const std::exception& ex) {
      throw DataError(source + ": malformed row: " + ex.what());
    }
    c.set_row(v, std::move(row));
  }
  c.set_totals(std::move(totals));
  return c;
}

std::vector<std::uint8_t> topology_bytes(const Topology& t) {
  Out o;
  o.put(t.C);
  o.put(t.M);
  o.put(t.rows);
  o.put(t.K);
  o.put(t.V);
  o.put(t.D);
  o.put(t.tokens);
  o.put(t.granularity);
  o.put(t.data_segments);
  o.put(t.sync_period);
  o.put(t.partition_fingerprint);
  return o.bytes;
}

}  // namespace

std::uint64_t Topology::hash() const { return crc64(topology_bytes(*this)); }

std::string Topology::differences(const Topology& o) const {
  std::ostringstream s;
  auto cmp = [&](const char* name, auto a, auto b) {
    if (a != b) s << (s.tellp() > 0 ? ", " : "") << name << " " << a << " vs " << b;
  };
  cmp("C", C, o.C);
  cmp("M", M, o.M);
  cmp("rows", rows, o.rows);
  cmp("K", K, o.K);
  cmp("V", V, o.V);
  cmp("D", D, o.D);
  cmp("tokens", tokens, o.tokens);
  cmp("granularity", granularity, o.granularity);
  cmp("data_segments", data_segments, o.data_segments);
  cmp("sync_period", sync_period, o.sync_period);
  cmp("partition", partition_fingerprint, o.partition_fingerprint);
  return s.str();
}

std::vector<std::uint8_t> serialize_state(const ClusterState& st) {
  Out o;
  o.put(kMagic);
  o.put(kVersion);
  o.put(st.topology.hash());
  o.put(st.iteration);

  auto p = o.open(kTopology);
  const auto tb = topology_bytes(st.topology);
  o.bytes.insert(o.bytes.end(), tb.begin(), tb.end());
  o.close(p);

  for (std::size_t m = 0; m < st.global_shards.size(); ++m) {
    p = o.open(kGlobalShard);
    o.put(static_cast<std::uint32_t>(m));
    put_counts(o, st.global_shards[m]);
    o.close(p);
  }
  p = o.open(kPsi);
  for (Count c : st.psi) o.put(static_cast<std::uint64_t>(c));
  o.close(p);
  p = o.open(kAlpha);
  for (double a : st.hyper.alpha) o.put(a);
  o.close(p);
  p = o.open(kBeta);
  o.put(st.hyper.beta);
  o.close(p);

  for (std::size_t c = 0; c < st.configs.size(); ++c) {
    const auto& cfg = st.configs[c];
    for (std::size_t m = 0; m < cfg.shards.size(); ++m) {
      p = o.open(kConfigShard);
      o.put(static_cast<std::uint32_t>(c));
      o.put(static_cast<std::uint32_t>(m));
      put_counts(o, cfg.shards[m]);
      o.close(p);
    }
    for (std::size_t r = 0; r < cfg.z.size(); ++r) {
      p = o.open(kZShard);
      o.put(static_cast<std::uint32_t>(c));
      o.put(static_cast<std::uint32_t>(r));
      o.put(static_cast<std::uint32_t>(cfg.z[r].size()));
      for (const auto& doc : cfg.z[r]) {
        o.put(static_cast<std::uint32_t>(doc.size()));
        for (TopicId k : doc) o.put(k);
      }
      o.close(p);
    }
    for (std::size_t m = 0; m < cfg.rng.size(); ++m) {
      p = o.open(kRngState);
      o.put(static_cast<std::uint32_t>(c));
      o.put(static_cast<std::uint32_t>(m));
      o.put_string(cfg.rng[m]);
      o.close(p);
    }
  }

  p = o.open(kVocabulary);
  std::ostringstream vs;
  st.vocab.write(vs);
  o.put_string(vs.str());
  o.close(p);

  o.put(crc64(o.bytes));
  return std::move(o.bytes);
}

ClusterState deserialize_state(std::span<const std::uint8_t> bytes, const std::string& source) {
  if (bytes.size() < 8 + 24) throw ChecksumError(source + ": checkpoint truncated");
  const auto body = bytes.first(bytes.size() - 8);
  In tail(bytes.last(8), source);
  if (tail.get<std::uint64_t>() != crc64(body)) throw ChecksumError(source + ": checkpoint checksum mismatch");

  In in(body, source);
  if (in.get<std::uint32_t>() != kMagic) throw DataError(source + ": not a checkpoint file");
  if (const auto v = in.get<std::uint32_t>(); v != kVersion) {
    throw DataError(source + ": unsupported checkpoint version " + std::to_string(v));
  }
  ClusterState st;
  const auto hash = in.get<std::uint64_t>();
  st.iteration = in.get<std::uint32_t>();

  auto config = [&](std::uint32_t c) -> ConfigState& {
    if (c >= st.configs.size()) st.configs.resize(c + 1);
    return st.configs[c];
  };
  bool have_topology = false;
  while (!in.done()) {
    const auto tag = in.get<std::uint32_t>();
    const auto len = in.get<std::uint64_t>();
    in.need(len);
    const std::size_t end = in.pos() + len;
    switch (tag) {
      case kTopology: {
        auto& t = st.topology;
        t.C = in.get<std::uint32_t>();
        t.M = in.get<std::uint32_t>();
        t.rows = in.get<std::uint32_t>();
        t.K = in.get<std::uint32_t>();
        t.V = in.get<std::uint64_t>();
        t.D = in.get<std::uint64_t>();
        t.tokens = in.get<std::uint64_t>();
        t.granularity = in.get<std::uint32_t>();
        t.data_segments = in.get<std::uint32_t>();
        t.sync_period = in.get<std::uint32_t>();
        t.partition_fingerprint = in.get<std::uint64_t>();
        have_topology = true;
        break;
      }
      case kGlobalShard: {
        const auto m = in.get<std::uint32_t>();
        if (m != st.global_shards.size()) throw DataError(source + ": global shards out of order");
        st.global_shards.push_back(get_counts(in, source));
        break;
      }
      case kPsi:
        st.psi.resize(len / 8);
        for (auto& c : st.psi) c = in.get<std::uint64_t>();
        break;
      case kAlpha:
        st.hyper.alpha.resize(len / 8);
        for (auto& a : st.hyper.alpha) a = in.get<double>();
        break;
      case kBeta:
        st.hyper.beta = in.get<double>();
        break;
      case kConfigShard: {
        auto& cfg = config(in.get<std::uint32_t>());
        if (in.get<std::uint32_t>() != cfg.shards.size()) throw DataError(source + ": shards out of order");
        cfg.shards.push_back(get_counts(in, source));
        break;
      }
      case kZShard: {
        auto& cfg = config(in.get<std::uint32_t>());
        if (in.get<std::uint32_t>() != cfg.z.size()) throw DataError(source + ": z shards out of order");
        auto& shard = cfg.z.emplace_back(in.get<std::uint32_t>());
        for (auto& doc : shard) {
          const auto n = in.get<std::uint32_t>();
          in.need(4ull * n);
          doc.resize(n);
          for (auto& k : doc) k = in.get<std::uint32_t>();
        }
        break;
      }
      case kRngState: {
        auto& cfg = config(in.get<std::uint32_t>());
        if (in.get<std::uint32_t>() != cfg.rng.size()) throw DataError(source + ": rng states out of order");
        cfg.rng.push_back(in.get_string());
        break;
      }
      case kVocabulary: {
        std::istringstream vs(in.get_string());
        st.vocab = Vocabulary::read(vs);
        break;
      }
      default:
        throw DataError(source + ": unknown checkpoint section " + std::to_string(tag));
    }
    if (in.pos() != end) throw DataError(source + ": checkpoint section length mismatch");
  }
  if (!have_topology) throw DataError(source + ": checkpoint has no topology section");
  if (hash != st.topology.hash()) throw DataError(source + ": topology hash does not match its section");
  return st;
}

void save_checkpoint(const ClusterState& state, const std::filesystem::path& path) {
  const auto bytes = serialize_state(state);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("cannot write checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ClusterState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_state(bytes, path.string());
}

WordTopicCounts merged_counts(const ClusterState& st) {
  const std::size_t V = st.vocab.size(), K = st.hyper.num_topics();
  WordTopicCounts out(V, K);
  std::vector<std::int64_t> acc(K);
  for (std::size_t m = 0; m < st.global_shards.size(); ++m) {
    const auto& g = st.global_shards[m];
    for (std::size_t v = 0; v < V; ++v) {
      const auto w = static_cast<WordId>(v);
      bool touched = !g.row(w).empty();
      for (const auto& cfg : st.configs) touched = touched || !cfg.shards[m].row(w).empty();
      if (!touched) continue;
      std::fill(acc.begin(), acc.end(), 0);
      for (const auto& e : g.row(w).entries()) acc[e.topic] += static_cast<std::int64_t>(e.count);
      for (const auto& cfg : st.configs) {
        for (const auto& e : cfg.shards[m].row(w).entries()) acc[e.topic] += static_cast<std::int64_t>(e.count);
        for (const auto& e : g.row(w).entries()) acc[e.topic] -= static_cast<std::int64_t>(e.count);
      }
      std::vector<TopicCount> entries;
      for (std::size_t k = 0; k < K; ++k) {
        if (acc[k] < 0) throw ConsistencyError("merged counts: negative entry");
        if (acc[k] > 0) entries.push_back({static_cast<TopicId>(k), static_cast<Count>(acc[k])});
      }
      SparseCounts row;
      row.assign(std::move(entries));
      out.set_row(w, std::move(row));
    }
  }
  out.set_totals(out.column_sums());
  return out;
}

TopicModel model_from_state(const ClusterState& state) {
  return TopicModel{merged_counts(state), state.hyper, state.vocab};
}

std::vector<std::uint8_t> encode_training_state(const WordTopicCounts& counts,
                                                const std::vector<std::vector<TopicId>>& z,
                                                const Hyperparameters& hyper) {
  Out o;
  put_counts(o, counts);
  o.put(static_cast<std::uint64_t>(z.size()));
  for (const auto& doc : z) {
    o.put(static_cast<std::uint32_t>(doc.size()));
    for (TopicId k : doc) o.put(k);
  }
  for (double a : hyper.alpha) o.put(a);
  o.put(hyper.beta);
  return std::move(o.bytes);
}

}  // namespace peacock

namespace peacock {

ClusterState remap_state(const ClusterState& state, std::span<const TopicId> remap, std::size_t new_topics,
                         const Hyperparameters& hyper) {
  if (remap.size() != state.topology.K) throw DataError("remap table does not cover the model's topics");
  if (hyper.num_topics() != new_topics) throw DataError("alpha does not match the new topic count");
  ClusterState out;
  out.topology = state.topology;
  out.topology.K = static_cast<std::uint32_t>(new_topics);
  out.iteration = state.iteration;
  out.hyper = hyper;
  out.vocab = state.vocab;
  // Shards carry the global Psi rather than their own column sums, so totals
  // are remapped separately from rows.
  auto remap_shard = [&](const WordTopicCounts& shard) {
    WordTopicCounts r = remap_topics(shard, remap, new_topics);
    std::vector<Count> totals(new_topics, 0);
    for (std::size_t k = 0; k < remap.size(); ++k) totals[remap[k]] += shard.total(static_cast<TopicId>(k));
    r.set_totals(std::move(totals));
    return r;
  };
  for (const auto& g : state.global_shards) out.global_shards.push_back(remap_shard(g));
  out.psi.assign(new_topics, 0);
  for (std::size_t k = 0; k < state.psi.size(); ++k) out.psi.at(remap[k]) += state.psi[k];
  for (const auto& c : state.configs) {
    ConfigState nc;
    for (const auto& s : c.shards) nc.shards.push_back(remap_shard(s));
    nc.z = c.z;
    for (auto& row : nc.z)
      for (auto& doc : row) remap_assignments(doc, remap);
    nc.rng = c.rng;
    out.configs.push_back(std::move(nc));
  }
  return out;
}

}  // namespace peacock
