#include "peacock/runtime/wire.hpp"

#include <bit>
#include <cstring>
#include <string>

namespace peacock {

namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
  template <typename T>
  void put(T value) {
    using U = std::make_unsigned_t<std::conditional_t<std::is_floating_point_v<T>, std::uint64_t, T>>;
    U bits;
    if constexpr (std::is_floating_point_v<T>) {
      bits = std::bit_cast<std::uint64_t>(value);
    } else {
      bits = static_cast<U>(value);
    }
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  template <typename T>
  T get() {
    using U = std::make_unsigned_t<std::conditional_t<std::is_floating_point_v<T>, std::uint64_t, T>>;
    if (in_.size() - pos_ < sizeof(U)) throw DataError("wire: truncated payload");
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(static_cast<U>(in_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    if constexpr (std::is_floating_point_v<T>) {
      return std::bit_cast<double>(static_cast<std::uint64_t>(bits));
    } else {
      return static_cast<T>(bits);
    }
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void encode_payload(Writer& w, const Message& msg) {
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, PackageRequest>) {
          w.put(m.block_id);
          w.put(m.seq);
          w.put(static_cast<std::uint32_t>(m.tokens.size()));
          for (const auto& t : m.tokens) {
            w.put(t.doc);
            w.put(t.word);
            w.put(t.topic);
          }
        } else if constexpr (std::is_same_v<M, PackageResponse>) {
          w.put(m.block_id);
          w.put(m.seq);
          w.put(static_cast<std::uint32_t>(m.changes.size()));
          for (const auto& c : m.changes) {
            w.put(c.index);
            w.put(c.topic);
          }
        } else if constexpr (std::is_same_v<M, PsiSync>) {
          for (Count c : m.psi) w.put(static_cast<std::uint64_t>(c));
        } else if constexpr (std::is_same_v<M, AlphaSync>) {
          for (double a : m.alpha) w.put(a);
        } else if constexpr (std::is_same_v<M, PhiDelta>) {
          for (const auto& e : m.entries) {
            w.put(e.word);
            w.put(e.topic);
            w.put(e.delta);
          }
        }
      },
      msg);
}

template <typename T>
std::vector<T> fixed_array(Reader& r, std::size_t width, const char* what) {
  if (r.remaining() % width != 0) throw DataError(std::string("wire: ") + what + " payload is not a whole number of entries");
  std::vector<T> out(r.remaining() / width);
  return out;
}

}  // namespace

MsgType message_type(const Message& msg) {
  return static_cast<MsgType>(msg.index() + 1);
}

std::vector<std::uint8_t> encode(const Message& msg) {
  std::vector<std::uint8_t> out;
  Writer w(out);
  w.put(kWireMagic);
  w.put(static_cast<std::uint8_t>(message_type(msg)));
  w.put(std::uint64_t{0});
  encode_payload(w, msg);
  const std::uint64_t len = out.size() - kFrameHeaderSize;
  for (std::size_t i = 0; i < 8; ++i) out[5 + i] = static_cast<std::uint8_t>(len >> (8 * i));
  return out;
}

FrameHeader decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderSize) throw DataError("wire: truncated header");
  Reader r(bytes.first(kFrameHeaderSize));
  if (r.get<std::uint32_t>() != kWireMagic) throw DataError("wire: bad magic");
  const auto type = r.get<std::uint8_t>();
  if (type < 1 || type > static_cast<std::uint8_t>(MsgType::Shutdown)) {
    throw DataError("wire: unknown message type " + std::to_string(type));
  }
  return {static_cast<MsgType>(type), r.get<std::uint64_t>()};
}

Message decode_payload(MsgType type, std::span<const std::uint8_t> payload) {
  Reader r(payload);
  auto finish = [&](Message m) {
    if (r.remaining() != 0) throw DataError("wire: trailing bytes in payload");
    return m;
  };
  switch (type) {
    case MsgType::PackageRequest: {
      PackageRequest m;
      m.block_id = r.get<std::uint32_t>();
      m.seq = r.get<std::uint32_t>();
      const auto n = r.get<std::uint32_t>();
      if (r.remaining() != static_cast<std::size_t>(n) * 12) throw DataError("wire: request token count mismatch");
      m.tokens.resize(n);
      for (auto& t : m.tokens) {
        t.doc = r.get<std::uint32_t>();
        t.word = r.get<std::uint32_t>();
        t.topic = r.get<std::uint32_t>();
      }
      return finish(std::move(m));
    }
    case MsgType::PackageResponse: {
      PackageResponse m;
      m.block_id = r.get<std::uint32_t>();
      m.seq = r.get<std::uint32_t>();
      const auto n = r.get<std::uint32_t>();
      if (r.remaining() != static_cast<std::size_t>(n) * 8) throw DataError("wire: response change count mismatch");
      m.changes.resize(n);
      for (auto& c : m.changes) {
        c.index = r.get<std::uint32_t>();
        c.topic = r.get<std::uint32_t>();
      }
      return finish(std::move(m));
    }
    case MsgType::PsiSync: {
      PsiSync m{fixed_array<Count>(r, 8, "psi")};
      for (auto& c : m.psi) c = r.get<std::uint64_t>();
      return finish(std::move(m));
    }
    case MsgType::AlphaSync: {
      AlphaSync m{fixed_array<double>(r, 8, "alpha")};
      for (auto& a : m.alpha) a = r.get<double>();
      return finish(std::move(m));
    }
    case MsgType::PhiDelta: {
      PhiDelta m{fixed_array<PhiDeltaEntry>(r, 16, "phi delta")};
      for (auto& e : m.entries) {
        e.word = r.get<std::uint32_t>();
        e.topic = r.get<std::uint32_t>();
        e.delta = r.get<std::int64_t>();
      }
      return finish(std::move(m));
    }
    case MsgType::PsiRequest:
      return finish(PsiRequest{});
    case MsgType::PhiDeltaRequest:
      return finish(PhiDeltaRequest{});
    case MsgType::Ack:
      return finish(Ack{});
    case MsgType::Shutdown:
      return finish(Shutdown{});
  }
  throw DataError("wire: unknown message type");
}

Message decode(std::span<const std::uint8_t> frame) {
  const auto h = decode_header(frame);
  if (frame.size() - kFrameHeaderSize != h.payload_len) throw DataError("wire: frame length mismatch");
  return decode_payload(h.type, frame.subspan(kFrameHeaderSize));
}

}  // namespace peacock
