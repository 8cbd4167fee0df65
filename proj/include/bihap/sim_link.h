#pragma once

/// @file
///
/// Deterministic stand-in for the wireless UDP channel: seeded latency,
/// jitter and loss. Messages cross the link as encoded datagrams.

#include <cstdint>
#include <set>
#include <vector>

#include "bihap/protocol.h"
#include "bihap/rng.h"

namespace bihap {

struct SimLinkConfig {
  double base_latency = 0.002;  // s
  double jitter_std = 0.0005;   // s
  double loss_probability = 0.0;

  void Validate() const;
};

class SimLink {
 public:
  SimLink(const SimLinkConfig& config, uint64_t seed, uint64_t stream_id = stream::kLinkDown);

  /// Drops the message with loss_probability, otherwise schedules it for
  /// now + max(0, base_latency + jitter).
  void Send(const protocol::Message& message, double now);

  /// Every message with deliver_at <= now, ordered by deliver_at, then
  /// sequence, then send order.
  std::vector<protocol::Message> Poll(double now);

  std::size_t in_flight() const { return in_flight_.size(); }
  uint64_t sent() const { return sent_; }
  uint64_t dropped() const { return dropped_; }
  const SimLinkConfig& config() const { return config_; }

 private:
  struct Pending {
    double deliver_at;
    uint16_t sequence;
    uint64_t order;
    std::vector<uint8_t> datagram;

    bool operator<(const Pending& other) const {
      if (deliver_at != other.deliver_at) { return deliver_at < other.deliver_at; }
      if (sequence != other.sequence) { return sequence < other.sequence; }
      return order < other.order;
    }
  };

  SimLinkConfig config_;
  RngStream rng_;
  std::set<Pending> in_flight_;
  uint64_t sent_ = 0;
  uint64_t dropped_ = 0;
};

}  // namespace bihap
