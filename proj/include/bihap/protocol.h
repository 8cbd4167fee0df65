#pragma once

/// @file
///
/// Host <-> device datagram format. One Message per UDP datagram:
///
///   offset  size  field
///   0       2     magic 0xB1 0x4A
///   2       1     version (0x01)
///   3       1     kind
///   4       2     sequence, little-endian u16
///   6       8     timestamp_us, little-endian u64
///   14      4·n   payload, n little-endian IEEE-754 binary32 fields
///   14+4n   4     CRC-32 (reflected, poly 0x04C11DB7) of bytes [0, 14+4n)

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace bihap::protocol {

inline constexpr uint8_t kMagic0 = 0xB1;
inline constexpr uint8_t kMagic1 = 0x4A;
inline constexpr uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderSize = 14;
inline constexpr std::size_t kCrcSize = 4;

inline constexpr uint16_t kDefaultDevicePort = 47800;
inline constexpr uint16_t kDefaultHostPort = 47801;

enum class Kind : uint8_t {
  kTorqueCommand = 1,
  kFeedbackModeCommand = 2,
  kGainUpdate = 3,
  kImuTelemetry = 4,
  kFlywheelTelemetry = 5,
  kHeartbeat = 6,
  kGameState = 7,
};

const char* ToString(Kind kind);

struct TorqueCommand {
  float tau_d = 0.0f;
  bool operator==(const TorqueCommand&) const = default;
};

/// mode: 0 torque, 1 vibration.
struct FeedbackModeCommand {
  float mode = 0.0f;
  float amplitude = 0.0f;
  float angular_frequency = 0.0f;
  bool operator==(const FeedbackModeCommand&) const = default;
};

struct GainUpdate {
  float k_p = 0.0f;
  float k_i = 0.0f;
  float k_d = 0.0f;
  float k_rot = 0.0f;
  float b_rot = 0.0f;
  float m_rot = 0.0f;
  bool operator==(const GainUpdate&) const = default;
};

struct ImuTelemetry {
  float roll = 0.0f;
  float pitch = 0.0f;
  float yaw = 0.0f;
  float rate_x = 0.0f;
  float rate_y = 0.0f;
  float rate_z = 0.0f;
  bool operator==(const ImuTelemetry&) const = default;
};

/// mode: 0 torque, 1 vibration.
struct FlywheelTelemetry {
  float angle = 0.0f;
  float omega = 0.0f;
  float reaction_torque = 0.0f;
  float commanded_torque = 0.0f;
  float mode = 0.0f;
  bool operator==(const FlywheelTelemetry&) const = default;
};

struct Heartbeat {
  bool operator==(const Heartbeat&) const = default;
};

/// Game state relayed from the play loop to the UI gateway. Angles in
/// degrees; zone / scenario / audio use the feedback enum values.
struct GameState {
  float object_angle = 0.0f;
  float target_angle = 0.0f;
  float device_angle = 0.0f;
  float zone = 0.0f;
  float scenario = 0.0f;
  float vibration = 0.0f;
  float score = 0.0f;
  float audio = 0.0f;
  bool operator==(const GameState&) const = default;
};

using Payload = std::variant<TorqueCommand, FeedbackModeCommand, GainUpdate,
                             ImuTelemetry, FlywheelTelemetry, Heartbeat, GameState>;

struct Message {
  uint16_t sequence = 0;
  uint64_t timestamp_us = 0;
  Payload payload = Heartbeat{};

  Kind kind() const;
  bool operator==(const Message&) const = default;
};

/// Number of binary32 fields carried by @p kind; -1 for unknown kinds.
int PayloadFieldCount(Kind kind);
int PayloadFieldCount(uint8_t raw_kind);

std::size_t EncodedSize(Kind kind);

std::vector<uint8_t> Encode(const Message& message);

enum class DecodeError : uint8_t {
  kNone = 0,
  kBadMagic,
  kBadVersion,
  kUnknownKind,
  kLengthMismatch,
  kCrcMismatch,
};

const char* ToString(DecodeError error);

struct DecodeResult {
  DecodeError error = DecodeError::kNone;
  Message message;

  bool ok() const { return error == DecodeError::kNone; }
};

/// Validation order: magic, version, kind, length, CRC.
DecodeResult Decode(std::span<const uint8_t> bytes);

uint32_t Crc32(std::span<const uint8_t> bytes);

/// Wrap-aware sequence comparison (serial number arithmetic on u16): true
/// when @p candidate is ahead of @p reference by 1..32767.
bool SequenceNewer(uint16_t candidate, uint16_t reference);

/// Newest-wins filter for one sender and kind. Accepts a sequence only if it
/// is strictly newer than everything accepted so far; anything at or
/// behind the latest (up to 2^15 back, wrap-aware) is stale.
class SequenceTracker {
 public:
  bool Accept(uint16_t sequence);
  bool has_latest() const { return has_latest_; }
  uint16_t latest() const { return latest_; }
  uint64_t dropped() const { return dropped_; }

 private:
  bool has_latest_ = false;
  uint16_t latest_ = 0;
  uint64_t dropped_ = 0;
};

/// Per-kind outgoing sequence counters for one sender.
class SequenceCounter {
 public:
  uint16_t Next(Kind kind);

 private:
  std::array<uint16_t, 256> next_{};
};

}  // namespace bihap::protocol
