#pragma once

/// @file
///
/// Bridge between the play loop (UDP, protocol Messages) and a single
/// browser client (WebSocket, JSON text frames).
///
/// Downstream frame, one per GameState:
///   {"type":"state","timestamp":s,"object_angle_deg":..,"target_angle_deg":..,
///    "device_angle_deg":..,"zone":"Green","scenario":"Normal","vibration":bool,
///    "vibration_amplitude_Nm":..,"score":n,"audio":"Ding"}
/// Upstream frames:
///   {"type":"input","client_ts":ms,"device_angle_deg":x}
///   {"type":"input","client_ts":ms,"angular_rate_deg_s":r}
///   {"type":"echo", ...}  returned to the client unchanged
///
/// Toward the play loop, client input travels as ImuTelemetry: yaw is the
/// device angle (NaN for rate input), rate_z the angular rate, and pitch is
/// 1 while a client is connected, 0 once it has gone.

#include <atomic>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bihap/protocol.h"

namespace bihap::net {

inline constexpr uint16_t kDefaultGatewayWsPort = 47810;
inline constexpr uint16_t kDefaultGatewayUdpPort = 47811;

struct ClientInput {
  std::optional<double> angle;  // rad
  double rate = 0.0;            // rad/s
  double client_ts = 0.0;       // ms, client clock
};

struct EchoFrame {
  std::string text;
};

/// Malformed frames yield std::monostate.
using ClientFrame = std::variant<std::monostate, ClientInput, EchoFrame>;

/// Strict parse: unknown keys, wrong types, or both/neither input field
/// make the frame malformed.
ClientFrame ParseClientFrame(const std::string& text);

std::string StateFrameJson(const protocol::Message& game_state);

protocol::Message InputMessage(const ClientInput& input, bool connected, uint16_t sequence,
                               uint64_t timestamp_us);

/// Connection and buffering rules, free of I/O.
class GatewayCore {
 public:
  explicit GatewayCore(double buffer_seconds = 1.0) : buffer_seconds_(buffer_seconds) {}

  /// False when a client is already connected.
  bool Connect();
  void Disconnect();
  bool connected() const { return connected_; }

  /// Frames to send now. Without a client the frame is buffered, keeping
  /// only the last buffer_seconds by GameState timestamp.
  std::vector<std::string> OnGameState(const protocol::Message& message);
  /// Buffered frames, oldest first; empties the buffer.
  std::vector<std::string> TakeBuffered();

  ClientFrame OnClientText(const std::string& text);

  std::size_t buffered() const { return buffer_.size(); }
  uint64_t dropped() const { return dropped_; }
  uint64_t malformed() const { return malformed_; }
  uint64_t rejected() const { return rejected_; }

 private:
  double buffer_seconds_;
  bool connected_ = false;
  std::deque<std::pair<uint64_t, std::string>> buffer_;
  uint64_t dropped_ = 0;
  uint64_t malformed_ = 0;
  uint64_t rejected_ = 0;
};

struct GatewayConfig {
  std::string bind_address = "127.0.0.1";
  uint16_t ws_port = kDefaultGatewayWsPort;
  std::string ws_path = "/session";
  uint16_t udp_port = kDefaultGatewayUdpPort;
  double buffer_seconds = 1.0;
  double duration = 0.0;  // s, 0 runs until stopped

  void Validate() const;
};

struct GatewayStats {
  uint64_t frames_sent = 0;
  uint64_t inputs_forwarded = 0;
  uint64_t malformed = 0;
  uint64_t dropped = 0;
  uint64_t rejected = 0;
};

/// Serves until @p stop is set or the duration ends. @p ready, if given,
/// is set once both sockets are listening.
GatewayStats RunGateway(const GatewayConfig& config, const std::atomic<bool>& stop,
                        std::atomic<bool>* ready = nullptr);

}  // namespace bihap::net
