#include "bihap/sim_link.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bihap {

void SimLinkConfig::Validate() const {
  if (!std::isfinite(base_latency) || base_latency < 0.0) {
    throw std::invalid_argument("SimLinkConfig.base_latency must be >= 0");
  }
  if (!std::isfinite(jitter_std) || jitter_std < 0.0) {
    throw std::invalid_argument("SimLinkConfig.jitter_std must be >= 0");
  }
  if (!(loss_probability >= 0.0 && loss_probability <= 1.0)) {
    throw std::invalid_argument("SimLinkConfig.loss_probability must be in [0, 1]");
  }
}

SimLink::SimLink(const SimLinkConfig& config, uint64_t seed, uint64_t stream_id)
    : config_(config), rng_(seed, stream_id) {
  config_.Validate();
}

void SimLink::Send(const protocol::Message& message, double now) {
  if (!std::isfinite(now)) {
    throw std::invalid_argument("SimLink::Send: now must be finite");
  }
  const uint64_t order = sent_++;
  if (rng_.Bernoulli(config_.loss_probability)) {
    ++dropped_;
    return;
  }
  const double delay =
      std::max(0.0, config_.base_latency + rng_.Normal(config_.jitter_std));
  in_flight_.insert(Pending{now + delay, message.sequence, order,
                            protocol::Encode(message)});
}

std::vector<protocol::Message> SimLink::Poll(double now) {
  std::vector<protocol::Message> due;
  while (!in_flight_.empty() && in_flight_.begin()->deliver_at <= now) {
    const auto decoded = protocol::Decode(in_flight_.begin()->datagram);
    // The link never corrupts, so this only fails on a programming error.
    if (!decoded.ok()) {
      throw std::logic_error("SimLink: datagram failed to decode");
    }
    due.push_back(decoded.message);
    in_flight_.erase(in_flight_.begin());
  }
  return due;
}

}  // namespace bihap
