#include "bihap/net/processes.h"

#include <cmath>
#include <iostream>
#include <thread>
#include <variant>

#include <fmt/format.h>

#include "bihap/harness/filter.h"
#include "bihap/harness/signal.h"
#include "bihap/net/log_writer.h"
#include "bihap/net/udp.h"

namespace bihap::net {

namespace p = protocol;
using Clock = std::chrono::steady_clock;

namespace {

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<float> FieldsOf(const p::Message& m) {
  return std::visit(
      [](const auto& v) -> std::vector<float> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, p::TorqueCommand>) {
          return {v.tau_d};
        } else if constexpr (std::is_same_v<T, p::FeedbackModeCommand>) {
          return {v.mode, v.amplitude, v.angular_frequency};
        } else if constexpr (std::is_same_v<T, p::GainUpdate>) {
          return {v.k_p, v.k_i, v.k_d, v.k_rot, v.b_rot, v.m_rot};
        } else if constexpr (std::is_same_v<T, p::ImuTelemetry>) {
          return {v.roll, v.pitch, v.yaw, v.rate_x, v.rate_y, v.rate_z};
        } else if constexpr (std::is_same_v<T, p::FlywheelTelemetry>) {
          return {v.angle, v.omega, v.reaction_torque, v.commanded_torque, v.mode};
        } else if constexpr (std::is_same_v<T, p::GameState>) {
          return {v.object_angle, v.target_angle, v.device_angle, v.zone,
                  v.scenario,     v.vibration,    v.score,        v.audio};
        } else {
          return {};
        }
      },
      m.payload);
}

int64_t EveryTicks(double rate_hz, int64_t tick_us) {
  return std::max<int64_t>(1, std::llround(1e6 / rate_hz / static_cast<double>(tick_us)));
}

}  // namespace

std::string TrafficLine(double wall_s, const char* direction, const p::Message& m) {
  std::string fields;
  for (float f : FieldsOf(m)) {
    if (!fields.empty()) { fields += ';'; }
    fields += fmt::format("{}", f);
  }
  return fmt::format("{:.6f},{},{},{},{},{}", wall_s, direction, p::ToString(m.kind()),
                     m.sequence, m.timestamp_us, fields);
}

void DeviceProcessConfig::Validate() const {
  FieldChecker c("device process config");
  c.Nested("device", [this] { device.Validate(); });
  c.Check(sensors.imu_period_us > 0 && device.tick_us > 0 &&
              sensors.imu_period_us % device.tick_us == 0,
          "sensors.imu_period_us");
  c.Check(sensors.torque_sensor_period_us > 0, "sensors.torque_sensor_period_us");
  c.Check(std::isfinite(telemetry_rate_hz) && telemetry_rate_hz > 0.0, "telemetry_rate_hz");
  c.Check(std::isfinite(duration) && duration >= 0.0, "duration");
  c.ThrowIfAny();
}

DeviceProcessStats RunDeviceProcess(const DeviceProcessConfig& config,
                                    const std::atomic<bool>& stop,
                                    const std::filesystem::path& out_dir) {
  config.Validate();
  UdpEndpoint socket(config.bind_address, config.listen_port);
  socket.SetPeer(MakeAddress(config.host_address, config.host_port));
  LogWriter ticks(out_dir / "device_ticks.csv", kDeviceTickCsvHeader);
  LogWriter traffic(out_dir / "device_traffic.csv", kTrafficCsvHeader);

  DeviceLoop device(config.device);
  SensorSuite sensors(config.sensors, config.seed);
  p::SequenceCounter seq;
  p::SequenceTracker torque_tracker;
  p::SequenceTracker mode_tracker;
  p::SequenceTracker gain_tracker;
  DeviceProcessStats stats;

  const int64_t tick_us = config.device.tick_us;
  const auto period = std::chrono::microseconds(tick_us);
  const int64_t telemetry_every = EveryTicks(config.telemetry_rate_hz, tick_us);
  const int64_t total_ticks =
      config.duration > 0.0 ? std::llround(config.duration * 1e6 / static_cast<double>(tick_us))
                            : -1;

  const Clock::time_point start = Clock::now();
  Clock::time_point next = start;
  double last_host = -1.0;
  bool warned = false;

  auto send = [&](p::Message m, double wall) {
    m.timestamp_us = MonotonicMicros();
    if (socket.Send(m)) { ++stats.sent; }
    traffic.Write(TrafficLine(wall, "tx", m));
  };

  while (!stop.load() && (total_ticks < 0 || stats.ticks < total_ticks)) {
    std::this_thread::sleep_until(next);
    const double wall = SecondsSince(start);

    for (const auto& d : socket.Poll()) {
      ++stats.received;
      traffic.Write(TrafficLine(wall, "rx", d.message));
      device.OnHostAlive();
      last_host = wall;
      warned = false;
      const p::Message& m = d.message;
      if (const auto* cmd = std::get_if<p::TorqueCommand>(&m.payload)) {
        if (torque_tracker.Accept(m.sequence)) {
          device.OnTorqueCommand(cmd->tau_d);
        } else {
          ++stats.stale;
        }
      } else if (const auto* mode = std::get_if<p::FeedbackModeCommand>(&m.payload)) {
        if (mode_tracker.Accept(m.sequence)) {
          device.OnVibrationCommand(mode->mode != 0.0f ? mode->amplitude : 0.0,
                                    mode->angular_frequency);
        } else {
          ++stats.stale;
        }
      } else if (const auto* g = std::get_if<p::GainUpdate>(&m.payload)) {
        if (gain_tracker.Accept(m.sequence)) { device.OnGainUpdate({g->k_p, g->k_i, g->k_d}); }
      }
    }

    const DeviceTick tick = device.Tick();
    const int64_t t_us = tick.time_us;
    const double silence = last_host < 0.0 ? wall : wall - last_host;
    if (tick.heartbeat_lost && !warned) {
      std::cerr << fmt::format("device: heartbeat lost, no host traffic for {:.3f} s\n", silence);
      warned = true;
    }

    const SensorReadout readout = sensors.Sample(Attitude{}, tick.reaction_torque, t_us);
    if (readout.orientation) {
      const OrientationSample& s = *readout.orientation;
      p::Message m;
      m.sequence = seq.Next(p::Kind::kImuTelemetry);
      m.payload = p::ImuTelemetry{
          static_cast<float>(s.roll),           static_cast<float>(s.pitch),
          static_cast<float>(s.yaw),            static_cast<float>(s.angular_rate[0]),
          static_cast<float>(s.angular_rate[1]), static_cast<float>(s.angular_rate[2])};
      send(m, wall);
    }
    if (stats.ticks % telemetry_every == 0) {
      p::Message m;
      m.sequence = seq.Next(p::Kind::kFlywheelTelemetry);
      m.payload = p::FlywheelTelemetry{
          static_cast<float>(device.flywheel().angle), static_cast<float>(tick.omega),
          static_cast<float>(tick.reaction_torque), static_cast<float>(tick.desired_torque),
          static_cast<float>(static_cast<int>(tick.mode))};
      send(m, wall);
    }

    ticks.Write(fmt::format("{:.6f},{},{:.6f},{},{},{},{},{}", wall,
                            static_cast<double>(t_us) * 1e-6, silence, tick.desired_torque,
                            tick.reaction_torque, tick.omega, ToString(tick.mode),
                            tick.heartbeat_lost ? 1 : 0));
    ++stats.ticks;
    next += period;
    if (Clock::now() - next > period) { ++stats.overruns; }
  }
  stats.decode_errors = socket.decode_errors();
  return stats;
}

void HostProcessConfig::Validate() const {
  FieldChecker c("host process config");
  if (goal == harness::GoalKind::kSinusoid) {
    c.Check(std::isfinite(alpha) && alpha > 0.0, "alpha");
    c.Check(std::isfinite(omega) && omega > 0.0, "omega");
  } else {
    c.Check(std::isfinite(amplitude) && amplitude > 0.0, "amplitude");
  }
  c.Check(std::isfinite(duration) && duration > 0.0, "duration");
  c.Check(std::isfinite(command_rate_hz) && command_rate_hz > 0.0 && command_rate_hz <= 1000.0,
          "command_rate_hz");
  c.Check(std::isfinite(heartbeat_rate_hz) && heartbeat_rate_hz > 0.0, "heartbeat_rate_hz");
  c.Check(std::isfinite(telemetry_rate_hz) && telemetry_rate_hz > 0.0, "telemetry_rate_hz");
  c.Check(cutoff_hz > 0.0 && cutoff_hz < telemetry_rate_hz / 2.0, "cutoff_hz");
  c.Check(filter_order >= 1, "filter_order");
  c.Check(std::isfinite(peer_timeout_s) && peer_timeout_s > 0.0, "peer_timeout_s");
  c.ThrowIfAny();
}

double HostProcessConfig::GoalAt(double t) const {
  return goal == harness::GoalKind::kSinusoid ? harness::SinusoidValue(alpha, omega, t)
                                              : harness::SquareValue(amplitude, t);
}

HostResult RunHostProcess(const HostProcessConfig& config, const std::atomic<bool>& stop,
                          const std::filesystem::path& out_dir) {
  config.Validate();
  UdpEndpoint socket(config.bind_address, config.listen_port);
  socket.SetPeer(MakeAddress(config.device_address, config.device_port));
  LogWriter traffic(out_dir / "host_traffic.csv", kTrafficCsvHeader);

  p::SequenceCounter seq;
  p::SequenceTracker flywheel_tracker;
  HostResult result;

  const auto period = std::chrono::milliseconds(1);
  const double command_period = 1.0 / config.command_rate_hz;
  const double heartbeat_period = 1.0 / config.heartbeat_rate_hz;
  const Clock::time_point start = Clock::now();
  const uint64_t start_us = MonotonicMicros();
  double next_command = 0.0;
  double next_heartbeat = 0.0;
  double last_peer = 0.0;
  Clock::time_point next = start;

  auto send = [&](p::Message m, double wall) {
    m.timestamp_us = MonotonicMicros();
    if (socket.Send(m)) { ++result.sent; }
    traffic.Write(TrafficLine(wall, "tx", m));
  };

  for (;;) {
    std::this_thread::sleep_until(next);
    next += period;
    const double wall = SecondsSince(start);
    if (stop.load() || wall >= config.duration) { break; }

    for (const auto& d : socket.Poll()) {
      ++result.received;
      last_peer = wall;
      traffic.Write(TrafficLine(wall, "rx", d.message));
      const p::Message& m = d.message;
      const auto* fw = std::get_if<p::FlywheelTelemetry>(&m.payload);
      if (!fw || !flywheel_tracker.Accept(m.sequence)) { continue; }
      const double t = (static_cast<double>(m.timestamp_us) - static_cast<double>(start_us)) * 1e-6;
      if (t < 0.0 || t >= config.duration) { continue; }
      result.telemetry.push_back({t, config.GoalAt(t), fw->reaction_torque, fw->omega,
                                  static_cast<int>(fw->mode)});
    }
    if (wall - last_peer > config.peer_timeout_s && !result.peer_lost) {
      std::cerr << fmt::format("host: heartbeat lost, no device traffic for {:.3f} s\n",
                               wall - last_peer);
      result.peer_lost = true;
    } else if (wall - last_peer <= config.peer_timeout_s) {
      result.peer_lost = false;
    }

    if (wall >= next_command) {
      // The goal is sampled at the nominal send instant, as a zero-order hold.
      const double t_cmd = next_command;
      next_command += command_period;
      p::Message m;
      m.sequence = seq.Next(p::Kind::kTorqueCommand);
      m.payload = p::TorqueCommand{static_cast<float>(config.GoalAt(t_cmd))};
      send(m, wall);
    }
    if (wall >= next_heartbeat) {
      next_heartbeat += heartbeat_period;
      p::Message m;
      m.sequence = seq.Next(p::Kind::kHeartbeat);
      send(m, wall);
    }
  }

  result.report = ScoreHostTelemetry(config, result.telemetry);
  return result;
}

harness::MetricsReport ScoreHostTelemetry(const HostProcessConfig& config,
                                          const std::vector<HostTelemetryRow>& rows) {
  harness::MetricsReport report;
  report.goal = harness::ToString(config.goal);
  report.duration = config.duration;
  report.seed = config.seed;
  if (config.goal == harness::GoalKind::kSinusoid) {
    report.alpha = config.alpha;
    report.omega = config.omega;
  } else {
    report.amplitude = config.amplitude;
  }
  if (rows.size() < 8) {
    report.notes["telemetry"] = fmt::format("only {} samples received", rows.size());
    return report;
  }

  const double dt = 1.0 / config.telemetry_rate_hz;
  const double t0 = rows.front().time_s;
  const auto n = static_cast<std::size_t>(std::llround((rows.back().time_s - t0) / dt)) + 1;
  std::vector<double> value(n, std::nan(""));
  for (const auto& r : rows) {
    const auto i = static_cast<std::size_t>(std::llround((r.time_s - t0) / dt));
    if (i < n) { value[i] = r.reaction; }
  }
  // Fill lost samples by interpolating between received neighbours.
  std::size_t prev = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::isnan(value[i])) { continue; }
    for (std::size_t j = prev + 1; j < i; ++j) {
      const double w = static_cast<double>(j - prev) / static_cast<double>(i - prev);
      value[j] = value[prev] + w * (value[i] - value[prev]);
    }
    prev = i;
  }

  harness::Signal raw{value, config.telemetry_rate_hz, t0};
  harness::Signal desired{std::vector<double>(n), config.telemetry_rate_hz, t0};
  for (std::size_t i = 0; i < n; ++i) { desired.samples[i] = config.GoalAt(raw.TimeAt(i)); }
  const harness::Signal filtered = harness::Lowpass(raw, config.cutoff_hz, config.filter_order);
  harness::ScoreTracking(report, config.goal, config.amplitude, filtered, raw, desired);
  return report;
}

}  // namespace bihap::net
