#include "bihap/net/live_operator.h"

#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "bihap/angles.h"

namespace bihap::net {

namespace p = protocol;
using Clock = std::chrono::steady_clock;

LiveOperator::LiveOperator(const LiveLinkConfig& config)
    : config_(config), socket_("127.0.0.1", 0), start_(Clock::now()) {
  socket_.SetPeer(MakeAddress(config.gateway_address, config.gateway_port));
  const auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(
                         std::chrono::duration<double>(config.connect_timeout_s));
  while (Clock::now() < deadline) {
    Heartbeat();
    if (auto d = socket_.Receive(std::chrono::milliseconds(200))) {
      if (std::holds_alternative<p::Heartbeat>(d->message.payload)) {
        start_ = Clock::now();
        return;
      }
    }
  }
  throw NetError(fmt::format("cannot connect to gateway at {}:{}: no reply within {} s",
                             config.gateway_address, config.gateway_port,
                             config.connect_timeout_s));
}

double LiveOperator::Elapsed() const {
  return std::chrono::duration<double>(Clock::now() - start_).count();
}

void LiveOperator::Heartbeat() {
  p::Message m;
  m.sequence = seq_.Next(p::Kind::kHeartbeat);
  m.timestamp_us = MonotonicMicros();
  socket_.Send(m);
}

teleop::OperatorInput LiveOperator::Step(const teleop::OperatorObservation& obs,
                                         const FeedbackCommand&, double) {
  std::this_thread::sleep_until(start_ + std::chrono::duration_cast<Clock::duration>(
                                             std::chrono::duration<double>(obs.t)));
  const double now = Elapsed();
  if (now >= next_heartbeat_) {
    Heartbeat();
    next_heartbeat_ = now + config_.heartbeat_period_s;
  }

  for (const auto& d : socket_.Poll()) {
    last_gateway_ = now;
    const auto* imu = std::get_if<p::ImuTelemetry>(&d.message.payload);
    if (!imu || !input_tracker_.Accept(d.message.sequence)) { continue; }
    connected_ = imu->pitch != 0.0f;
    rate_ = connected_ ? imu->rate_z : 0.0;
    angle_ = std::isnan(imu->yaw) ? std::nullopt : std::optional<double>(imu->yaw);
    if (connected_) { last_input_ = now; }
  }

  teleop::OperatorInput in;
  in.disconnected = now - last_gateway_ > config_.gateway_timeout_s;
  in.frozen = !connected_ || now - last_input_ > config_.input_stale_s;
  if (!in.frozen) {
    in.rate = rate_;
    in.angle = angle_;
  }
  return in;
}

void LiveOperator::Publish(const teleop::SessionRow& row) {
  p::Message m;
  m.sequence = seq_.Next(p::Kind::kGameState);
  m.timestamp_us = static_cast<uint64_t>(std::llround(row.t * 1e6));
  m.payload = p::GameState{static_cast<float>(row.object_deg),
                           static_cast<float>(row.target_deg),
                           static_cast<float>(row.device_deg),
                           static_cast<float>(static_cast<int>(row.zone)),
                           static_cast<float>(static_cast<int>(row.scenario)),
                           static_cast<float>(row.vibration),
                           static_cast<float>(row.fit_count),
                           static_cast<float>(static_cast<int>(row.audio))};
  socket_.Send(m);
}

}  // namespace bihap::net
