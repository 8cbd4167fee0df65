#include "bihap/protocol.h"

#include <bit>
#include <cstring>
#include <limits>
#include <type_traits>

#include <boost/crc.hpp>

namespace bihap::protocol {

namespace {

static_assert(std::numeric_limits<float>::is_iec559);

void PutU16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) { out.push_back(static_cast<uint8_t>(v >> (8 * i))); }
}

void PutU64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) { out.push_back(static_cast<uint8_t>(v >> (8 * i))); }
}

void PutF32(std::vector<uint8_t>& out, float v) { PutU32(out, std::bit_cast<uint32_t>(v)); }

uint16_t GetU16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (static_cast<uint16_t>(p[1]) << 8));
}

uint32_t GetU32(const uint8_t* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) { v |= static_cast<uint32_t>(p[i]) << (8 * i); }
  return v;
}

uint64_t GetU64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) { v |= static_cast<uint64_t>(p[i]) << (8 * i); }
  return v;
}

float GetF32(const uint8_t* p) { return std::bit_cast<float>(GetU32(p)); }

// Payload structs are plain aggregates of floats, so field order is the
// declaration order.
template <typename T>
constexpr std::size_t FieldCountOf() {
  return sizeof(T) == 1 ? 0 : sizeof(T) / sizeof(float);
}

template <typename T>
void PutFields(std::vector<uint8_t>& out, const T& value) {
  if constexpr (FieldCountOf<T>() > 0) {
    std::array<float, FieldCountOf<T>()> fields;
    std::memcpy(fields.data(), &value, sizeof(T));
    for (float f : fields) { PutF32(out, f); }
  }
}

template <typename T>
T GetFields(const uint8_t* p) {
  T value{};
  if constexpr (FieldCountOf<T>() > 0) {
    std::array<float, FieldCountOf<T>()> fields;
    for (std::size_t i = 0; i < fields.size(); ++i) { fields[i] = GetF32(p + 4 * i); }
    std::memcpy(static_cast<void*>(&value), fields.data(), sizeof(T));
  }
  return value;
}

static_assert(FieldCountOf<TorqueCommand>() == 1);
static_assert(FieldCountOf<FeedbackModeCommand>() == 3);
static_assert(FieldCountOf<GainUpdate>() == 6);
static_assert(FieldCountOf<ImuTelemetry>() == 6);
static_assert(FieldCountOf<FlywheelTelemetry>() == 5);
static_assert(FieldCountOf<Heartbeat>() == 0);
static_assert(FieldCountOf<GameState>() == 8);

Payload DecodePayload(Kind kind, const uint8_t* p) {
  switch (kind) {
    case Kind::kTorqueCommand: return GetFields<TorqueCommand>(p);
    case Kind::kFeedbackModeCommand: return GetFields<FeedbackModeCommand>(p);
    case Kind::kGainUpdate: return GetFields<GainUpdate>(p);
    case Kind::kImuTelemetry: return GetFields<ImuTelemetry>(p);
    case Kind::kFlywheelTelemetry: return GetFields<FlywheelTelemetry>(p);
    case Kind::kHeartbeat: return Heartbeat{};
    case Kind::kGameState: return GetFields<GameState>(p);
  }
  return Heartbeat{};
}

}  // namespace

const char* ToString(Kind kind) {
  switch (kind) {
    case Kind::kTorqueCommand: return "TorqueCommand";
    case Kind::kFeedbackModeCommand: return "FeedbackModeCommand";
    case Kind::kGainUpdate: return "GainUpdate";
    case Kind::kImuTelemetry: return "ImuTelemetry";
    case Kind::kFlywheelTelemetry: return "FlywheelTelemetry";
    case Kind::kHeartbeat: return "Heartbeat";
    case Kind::kGameState: return "GameState";
  }
  return "?";
}

const char* ToString(DecodeError error) {
  switch (error) {
    case DecodeError::kNone: return "None";
    case DecodeError::kBadMagic: return "BadMagic";
    case DecodeError::kBadVersion: return "BadVersion";
    case DecodeError::kUnknownKind: return "UnknownKind";
    case DecodeError::kLengthMismatch: return "LengthMismatch";
    case DecodeError::kCrcMismatch: return "CrcMismatch";
  }
  return "?";
}

Kind Message::kind() const {
  return std::visit(
      [](const auto& p) -> Kind {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TorqueCommand>) return Kind::kTorqueCommand;
        else if constexpr (std::is_same_v<T, FeedbackModeCommand>) return Kind::kFeedbackModeCommand;
        else if constexpr (std::is_same_v<T, GainUpdate>) return Kind::kGainUpdate;
        else if constexpr (std::is_same_v<T, ImuTelemetry>) return Kind::kImuTelemetry;
        else if constexpr (std::is_same_v<T, FlywheelTelemetry>) return Kind::kFlywheelTelemetry;
        else if constexpr (std::is_same_v<T, Heartbeat>) return Kind::kHeartbeat;
        else return Kind::kGameState;
      },
      payload);
}

int PayloadFieldCount(uint8_t raw_kind) {
  switch (raw_kind) {
    case static_cast<uint8_t>(Kind::kTorqueCommand): return 1;
    case static_cast<uint8_t>(Kind::kFeedbackModeCommand): return 3;
    case static_cast<uint8_t>(Kind::kGainUpdate): return 6;
    case static_cast<uint8_t>(Kind::kImuTelemetry): return 6;
    case static_cast<uint8_t>(Kind::kFlywheelTelemetry): return 5;
    case static_cast<uint8_t>(Kind::kHeartbeat): return 0;
    case static_cast<uint8_t>(Kind::kGameState): return 8;
    default: return -1;
  }
}

int PayloadFieldCount(Kind kind) { return PayloadFieldCount(static_cast<uint8_t>(kind)); }

std::size_t EncodedSize(Kind kind) {
  return kHeaderSize + 4 * static_cast<std::size_t>(PayloadFieldCount(kind)) + kCrcSize;
}

uint32_t Crc32(std::span<const uint8_t> bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

std::vector<uint8_t> Encode(const Message& message) {
  const Kind kind = message.kind();
  std::vector<uint8_t> out;
  out.reserve(EncodedSize(kind));
  out.push_back(kMagic0);
  out.push_back(kMagic1);
  out.push_back(kVersion);
  out.push_back(static_cast<uint8_t>(kind));
  PutU16(out, message.sequence);
  PutU64(out, message.timestamp_us);
  std::visit([&](const auto& p) { PutFields(out, p); }, message.payload);
  PutU32(out, Crc32(out));
  return out;
}

DecodeResult Decode(std::span<const uint8_t> bytes) {
  DecodeResult result;
  const std::size_t n = bytes.size();
  if ((n >= 1 && bytes[0] != kMagic0) || (n >= 2 && bytes[1] != kMagic1)) {
    result.error = DecodeError::kBadMagic;
    return result;
  }
  if (n < kHeaderSize + kCrcSize) {
    result.error = DecodeError::kLengthMismatch;
    return result;
  }
  if (bytes[2] != kVersion) {
    result.error = DecodeError::kBadVersion;
    return result;
  }
  const int fields = PayloadFieldCount(bytes[3]);
  if (fields < 0) {
    result.error = DecodeError::kUnknownKind;
    return result;
  }
  const std::size_t expected = kHeaderSize + 4 * static_cast<std::size_t>(fields) + kCrcSize;
  if (n != expected) {
    result.error = DecodeError::kLengthMismatch;
    return result;
  }
  const std::size_t body = expected - kCrcSize;
  if (Crc32(bytes.first(body)) != GetU32(bytes.data() + body)) {
    result.error = DecodeError::kCrcMismatch;
    return result;
  }
  result.message.sequence = GetU16(bytes.data() + 4);
  result.message.timestamp_us = GetU64(bytes.data() + 6);
  result.message.payload = DecodePayload(static_cast<Kind>(bytes[3]), bytes.data() + kHeaderSize);
  return result;
}

bool SequenceNewer(uint16_t candidate, uint16_t reference) {
  const auto diff = static_cast<uint16_t>(candidate - reference);
  return diff != 0 && diff < 0x8000;
}

bool SequenceTracker::Accept(uint16_t sequence) {
  if (!has_latest_ || SequenceNewer(sequence, latest_)) {
    has_latest_ = true;
    latest_ = sequence;
    return true;
  }
  ++dropped_;
  return false;
}

uint16_t SequenceCounter::Next(Kind kind) {
  return next_[static_cast<uint8_t>(kind)]++;
}

}  // namespace bihap::protocol
