#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "peacock/types.hpp"

namespace peacock {

// Little-endian frames: u32 magic, u8 type, u64 payload length, payload.
inline constexpr std::uint32_t kWireMagic = 0x50434B31;
inline constexpr std::size_t kFrameHeaderSize = 13;

enum class MsgType : std::uint8_t {
  PackageRequest = 1,
  PackageResponse = 2,
  PsiSync = 3,
  AlphaSync = 4,
  PhiDelta = 5,
  PsiRequest = 6,
  PhiDeltaRequest = 7,
  Ack = 8,
  Shutdown = 9,
};

struct WireToken {
  std::uint32_t doc = 0;
  std::uint32_t word = 0;
  std::uint32_t topic = 0;
  friend bool operator==(const WireToken&, const WireToken&) = default;
};

struct ZChange {
  std::uint32_t index = 0;  // position in the request's token list
  std::uint32_t topic = 0;
  friend bool operator==(const ZChange&, const ZChange&) = default;
};

/// {u32 block_id, u32 package_seq, u32 count, count x (doc, word, topic)}
struct PackageRequest {
  std::uint32_t block_id = 0;
  std::uint32_t seq = 0;
  std::vector<WireToken> tokens;
  friend bool operator==(const PackageRequest&, const PackageRequest&) = default;
};

/// {u32 block_id, u32 package_seq, u32 count, count x (index, new_topic)}
struct PackageResponse {
  std::uint32_t block_id = 0;
  std::uint32_t seq = 0;
  std::vector<ZChange> changes;
  friend bool operator==(const PackageResponse&, const PackageResponse&) = default;
};

/// K x u64.
struct PsiSync {
  std::vector<Count> psi;
  friend bool operator==(const PsiSync&, const PsiSync&) = default;
};

/// K x f64.
struct AlphaSync {
  std::vector<double> alpha;
  friend bool operator==(const AlphaSync&, const AlphaSync&) = default;
};

struct PhiDeltaEntry {
  std::uint32_t word = 0;
  std::uint32_t topic = 0;
  std::int64_t delta = 0;
  friend bool operator==(const PhiDeltaEntry&, const PhiDeltaEntry&) = default;
};

/// Sparse (u32 word, u32 topic, i64 delta) triples.
struct PhiDelta {
  std::vector<PhiDeltaEntry> entries;
  friend bool operator==(const PhiDelta&, const PhiDelta&) = default;
};

// Empty control messages.
struct PsiRequest {
  friend bool operator==(const PsiRequest&, const PsiRequest&) = default;
};
struct PhiDeltaRequest {
  friend bool operator==(const PhiDeltaRequest&, const PhiDeltaRequest&) = default;
};
struct Ack {
  friend bool operator==(const Ack&, const Ack&) = default;
};
struct Shutdown {
  friend bool operator==(const Shutdown&, const Shutdown&) = default;
};

using Message = std::variant<PackageRequest, PackageResponse, PsiSync, AlphaSync, PhiDelta, PsiRequest,
                             PhiDeltaRequest, Ack, Shutdown>;

MsgType message_type(const Message& msg);

/// Whole frame, header included.
std::vector<std::uint8_t> encode(const Message& msg);

struct FrameHeader {
  MsgType type;
  std::uint64_t payload_len;
};

/// Parses a header from at least kFrameHeaderSize bytes; throws DataError on
/// a bad magic or unknown type.
FrameHeader decode_header(std::span<const std::uint8_t> bytes);
Message decode_payload(MsgType type, std::span<const std::uint8_t> payload);
/// One complete frame; trailing bytes are an error.
Message decode(std::span<const std::uint8_t> frame);

}  // namespace peacock
