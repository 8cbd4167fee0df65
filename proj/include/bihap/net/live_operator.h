#pragma once

/// @file
///
/// Operator source backed by the gateway: paces the session to wall-clock
/// time, forwards game state downstream, and applies the client's input.

#include <chrono>
#include <string>

#include "bihap/net/gateway.h"
#include "bihap/net/udp.h"
#include "bihap/teleop.h"

namespace bihap::net {

struct LiveLinkConfig {
  std::string gateway_address = "127.0.0.1";
  uint16_t gateway_port = kDefaultGatewayUdpPort;
  double connect_timeout_s = 1.0;
  double heartbeat_period_s = 0.5;
  /// Client input older than this freezes the device.
  double input_stale_s = 0.5;
  /// Gateway silence longer than this aborts the session.
  double gateway_timeout_s = 2.0;
};

class LiveOperator : public teleop::OperatorSource {
 public:
  /// Performs the Heartbeat handshake; throws NetError if the gateway does
  /// not answer within connect_timeout_s.
  explicit LiveOperator(const LiveLinkConfig& config);

  teleop::OperatorInput Step(const teleop::OperatorObservation& observation,
                             const FeedbackCommand& feedback, double dt) override;

  /// Sends one refresh row to the gateway as a GameState.
  void Publish(const teleop::SessionRow& row);

 private:
  void Heartbeat();
  double Elapsed() const;

  LiveLinkConfig config_;
  UdpEndpoint socket_;
  protocol::SequenceCounter seq_;
  protocol::SequenceTracker input_tracker_;
  std::chrono::steady_clock::time_point start_;
  double last_gateway_ = 0.0;
  double last_input_ = -1e9;
  double next_heartbeat_ = 0.0;
  bool connected_ = false;
  double rate_ = 0.0;
  std::optional<double> angle_;
};

}  // namespace bihap::net
