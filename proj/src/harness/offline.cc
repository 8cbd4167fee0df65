#include "bihap/harness/offline.h"

#include <cmath>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "bihap/harness/filter.h"
#include "bihap/harness/metrics.h"
#include "bihap/harness/signal.h"
#include "bihap/protocol.h"

namespace bihap::harness {

const char* ToString(GoalKind kind) {
  return kind == GoalKind::kSinusoid ? "sinusoid" : "square";
}

GoalKind ParseGoalKind(const std::string& text) {
  if (text == "sinusoid" || text == "sin") { return GoalKind::kSinusoid; }
  if (text == "square") { return GoalKind::kSquare; }
  throw std::invalid_argument(fmt::format("unknown goal '{}' (sinusoid|square)", text));
}

void OfflineConfig::Validate() const {
  FieldChecker c("offline config");
  if (goal == GoalKind::kSinusoid) {
    c.Check(std::isfinite(alpha) && alpha > 0.0, "alpha");
    c.Check(std::isfinite(omega) && omega > 0.0, "omega");
  } else {
    c.Check(std::isfinite(amplitude) && amplitude > 0.0, "amplitude");
  }
  c.Check(std::isfinite(duration) && duration > 0.0, "duration");
  c.Check(std::isfinite(command_rate_hz) && command_rate_hz > 0.0, "command_rate_hz");
  c.Check(std::isfinite(telemetry_rate_hz) && telemetry_rate_hz > 0.0, "telemetry_rate_hz");
  c.Check(filter_order >= 1, "filter_order");
  c.Check(sensors.torque_sensor_period_us > 0, "sensors.torque_sensor_period_us");
  if (sensors.torque_sensor_period_us > 0) {
    const double sensor_rate = 1e6 / static_cast<double>(sensors.torque_sensor_period_us);
    c.Check(cutoff_hz > 0.0 && cutoff_hz < sensor_rate / 2.0, "cutoff_hz");
  }
  c.Check(sensors.torque_noise_std >= 0.0, "sensors.torque_noise_std");
  if (device.tick_us > 0) {
    const double tick_hz = 1e6 / static_cast<double>(device.tick_us);
    c.Check(command_rate_hz <= tick_hz, "command_rate_hz");
    c.Check(telemetry_rate_hz <= tick_hz, "telemetry_rate_hz");
    c.Check(sensors.torque_sensor_period_us % device.tick_us == 0,
            "sensors.torque_sensor_period_us");
  }
  c.Nested("device", [this] { device.Validate(); });
  c.Nested("downlink", [this] { downlink.Validate(); });
  c.Nested("uplink", [this] { uplink.Validate(); });
  c.ThrowIfAny();
}

double OfflineConfig::GoalAt(double t) const {
  return goal == GoalKind::kSinusoid ? SinusoidValue(alpha, omega, t)
                                     : SquareValue(amplitude, t);
}

std::string FormatNumber(double value) { return fmt::format("{}", value); }

namespace {

void PutOptional(std::ostringstream& out, const char* key, const std::optional<double>& v) {
  out << key << '=' << (v ? FormatNumber(*v) : std::string("absent")) << '\n';
}

std::optional<double> GetOptional(const std::string& text) {
  if (text == "absent") { return std::nullopt; }
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) { throw std::invalid_argument("trailing characters in '" + text + "'"); }
  return v;
}

int64_t SamplesPer(double rate_hz, int64_t tick_us) {
  return std::max<int64_t>(1, std::llround(1e6 / rate_hz / static_cast<double>(tick_us)));
}

}  // namespace

std::string FormatReport(const MetricsReport& r) {
  std::ostringstream out;
  out << "goal=" << r.goal << '\n';
  PutOptional(out, "alpha", r.alpha);
  PutOptional(out, "omega", r.omega);
  PutOptional(out, "amplitude", r.amplitude);
  out << "duration=" << FormatNumber(r.duration) << '\n';
  out << "seed=" << r.seed << '\n';
  PutOptional(out, "rmse", r.rmse);
  PutOptional(out, "rmse_raw", r.rmse_raw);
  PutOptional(out, "latency", r.latency);
  PutOptional(out, "overshoot_percent", r.overshoot_percent);
  PutOptional(out, "peak_time", r.peak_time);
  out << "fit_count=" << (r.fit_count ? std::to_string(*r.fit_count) : "absent") << '\n';
  for (const auto& [key, note] : r.notes) { out << "note." << key << '=' << note << '\n'; }
  return out.str();
}

MetricsReport ParseReport(const std::string& text) {
  MetricsReport r;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) { continue; }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(fmt::format("report line {}: missing '='", lineno));
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "goal") { r.goal = value; }
    else if (key == "alpha") { r.alpha = GetOptional(value); }
    else if (key == "omega") { r.omega = GetOptional(value); }
    else if (key == "amplitude") { r.amplitude = GetOptional(value); }
    else if (key == "duration") { r.duration = std::stod(value); }
    else if (key == "seed") { r.seed = std::stoull(value); }
    else if (key == "rmse") { r.rmse = GetOptional(value); }
    else if (key == "rmse_raw") { r.rmse_raw = GetOptional(value); }
    else if (key == "latency") { r.latency = GetOptional(value); }
    else if (key == "overshoot_percent") { r.overshoot_percent = GetOptional(value); }
    else if (key == "peak_time") { r.peak_time = GetOptional(value); }
    else if (key == "fit_count") {
      if (value != "absent") { r.fit_count = std::stoll(value); }
    } else if (key.rfind("note.", 0) == 0) {
      r.notes[key.substr(5)] = value;
    } else {
      throw std::invalid_argument(fmt::format("report line {}: unknown key '{}'", lineno, key));
    }
  }
  return r;
}

void ScoreTracking(MetricsReport& report, GoalKind goal, double amplitude, const Signal& filtered,
                   const Signal& raw, const Signal& desired) {
  report.goal = ToString(goal);
  report.rmse = Rmse(filtered, desired);
  report.rmse_raw = Rmse(raw, desired);
  if (goal == GoalKind::kSinusoid) {
    try {
      report.latency = EstimateLatency(filtered, desired).latency;
    } catch (const MetricError& e) {
      report.notes["latency"] = ToString(e.code());
    }
  } else {
    try {
      const SquareResponse sq = AnalyzeSquareResponse(filtered, desired, amplitude);
      report.overshoot_percent = sq.max_overshoot_percent;
      report.peak_time = sq.mean_peak_time;
    } catch (const MetricError& e) {
      report.notes["overshoot_percent"] = ToString(e.code());
      report.notes["peak_time"] = ToString(e.code());
    }
  }
}

OfflineResult RunOffline(const OfflineConfig& config) {
  config.Validate();
  namespace p = protocol;

  const int64_t tick_us = config.device.tick_us;
  const auto ticks = static_cast<int64_t>(SampleCount(1e6 / static_cast<double>(tick_us),
                                                      config.duration));
  const int64_t command_every = SamplesPer(config.command_rate_hz, tick_us);
  const int64_t telemetry_every = SamplesPer(config.telemetry_rate_hz, tick_us);

  DeviceLoop device(config.device);
  SensorSuite sensors(config.sensors, config.seed);
  SimLink downlink(config.downlink, config.seed, stream::kLinkDown);
  SimLink uplink(config.uplink, config.seed, stream::kLinkUp);
  p::SequenceCounter host_seq;
  p::SequenceCounter device_seq;
  p::SequenceTracker command_tracker;

  OfflineResult result;
  std::vector<OfflineRow>& rows = result.rows;
  rows.reserve(static_cast<std::size_t>(ticks / (config.sensors.torque_sensor_period_us / tick_us) + 1));

  for (int64_t k = 0; k < ticks; ++k) {
    const int64_t t_us = k * tick_us;
    const double t = static_cast<double>(t_us) * 1e-6;

    if (k % command_every == 0) {
      p::Message m;
      m.sequence = host_seq.Next(p::Kind::kTorqueCommand);
      m.timestamp_us = static_cast<uint64_t>(t_us);
      m.payload = p::TorqueCommand{static_cast<float>(config.GoalAt(t))};
      downlink.Send(m, t);
    }
    for (const auto& m : downlink.Poll(t)) {
      device.OnHostAlive();
      if (const auto* cmd = std::get_if<p::TorqueCommand>(&m.payload)) {
        if (command_tracker.Accept(m.sequence)) { device.OnTorqueCommand(cmd->tau_d); }
      }
    }

    const DeviceTick tick = device.Tick();

    if (k % telemetry_every == 0) {
      p::Message m;
      m.sequence = device_seq.Next(p::Kind::kFlywheelTelemetry);
      m.timestamp_us = static_cast<uint64_t>(t_us);
      m.payload = p::FlywheelTelemetry{
          static_cast<float>(device.flywheel().angle), static_cast<float>(tick.omega),
          static_cast<float>(tick.reaction_torque), static_cast<float>(tick.desired_torque),
          static_cast<float>(static_cast<int>(tick.mode))};
      uplink.Send(m, t);
    }
    uplink.Poll(t);

    const SensorReadout readout = sensors.Sample(Attitude{}, tick.reaction_torque, t_us);
    if (readout.torque) {
      rows.push_back({t, config.GoalAt(t), readout.torque->torque, 0.0, tick.omega, tick.mode});
    }
  }

  const double sensor_rate = 1e6 / static_cast<double>(config.sensors.torque_sensor_period_us);
  Signal raw{{}, sensor_rate, 0.0};
  Signal desired{{}, sensor_rate, 0.0};
  for (const auto& r : rows) {
    raw.samples.push_back(r.raw);
    desired.samples.push_back(r.desired);
  }
  const Signal filtered = Lowpass(raw, config.cutoff_hz, config.filter_order);
  for (std::size_t i = 0; i < rows.size(); ++i) { rows[i].filtered = filtered.samples[i]; }

  MetricsReport& report = result.report;
  report.duration = config.duration;
  report.seed = config.seed;
  if (config.goal == GoalKind::kSinusoid) {
    report.alpha = config.alpha;
    report.omega = config.omega;
  } else {
    report.amplitude = config.amplitude;
  }
  ScoreTracking(report, config.goal, config.amplitude, filtered, raw, desired);
  return result;
}

void WriteOfflineCsv(std::ostream& out, const std::vector<OfflineRow>& rows) {
  out << kOfflineCsvHeader << '\n';
  for (const auto& r : rows) {
    out << FormatNumber(r.time_s) << ',' << FormatNumber(r.desired) << ','
        << FormatNumber(r.raw) << ',' << FormatNumber(r.filtered) << ','
        << FormatNumber(r.omega) << ',' << ToString(r.mode) << '\n';
  }
}

}  // namespace bihap::harness
