#include "bihap/teleop.h"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "bihap/angles.h"
#include "bihap/config_error.h"
#include "bihap/protocol.h"

namespace bihap::teleop {

namespace {

std::string Num(double v) { return fmt::format("{}", v); }

int64_t TicksPer(double rate_hz, int64_t tick_us) {
  return std::max<int64_t>(1, std::llround(1e6 / rate_hz / static_cast<double>(tick_us)));
}

}  // namespace

void SurrogateParams::Validate() const {
  FieldChecker c("surrogate params");
  c.Check(std::isfinite(natural_frequency) && natural_frequency > 0.0, "natural_frequency");
  c.Check(std::isfinite(damping_ratio) && damping_ratio > 0.0, "damping_ratio");
  c.Check(std::isfinite(disturbance_std) && disturbance_std >= 0.0, "disturbance_std");
  c.Check(std::isfinite(failure_rate) && failure_rate >= 0.0, "failure_rate");
  c.Check(std::isfinite(stuck_duration) && stuck_duration > 0.0, "stuck_duration");
  c.ThrowIfAny();
}

const char* ToString(FailureKind kind) {
  switch (kind) {
    case FailureKind::kNone: return "none";
    case FailureKind::kStuck: return "stuck";
    case FailureKind::kFallen: return "fallen";
  }
  return "?";
}

ObjectState SurrogateStep(const ObjectState& state, double commanded, const SurrogateParams& p,
                          double dt, RngStream& disturbance, RngStream& failures) {
  if (!(dt > 0.0)) { throw std::invalid_argument("SurrogateStep: dt must be > 0"); }
  const double wn = p.natural_frequency;
  const double noise = disturbance.Normal(p.disturbance_std);
  const bool strike = failures.Bernoulli(1.0 - std::exp(-p.failure_rate * dt));
  const bool fallen = failures.Bernoulli(0.5);

  ObjectState next = state;
  if (!state.ok) {
    next.failure_remaining -= dt;
    if (next.failure_remaining <= 1e-12) {
      if (state.failure == FailureKind::kFallen) { next.angle = commanded; }
      next.velocity = 0.0;
      next.ok = true;
      next.failure = FailureKind::kNone;
      next.failure_remaining = 0.0;
    }
    return next;
  }
  if (strike) {
    next.ok = false;
    next.failure = fallen ? FailureKind::kFallen : FailureKind::kStuck;
    next.failure_remaining = p.stuck_duration;
    next.velocity = 0.0;
    return next;
  }
  const double accel = wn * wn * (commanded - state.angle + noise) -
                       2.0 * p.damping_ratio * wn * state.velocity;
  next.velocity = state.velocity + accel * dt;
  next.angle = state.angle + next.velocity * dt;
  return next;
}

Surrogate::Surrogate(const SurrogateParams& params, uint64_t seed)
    : params_(params),
      disturbance_(seed, stream::kSurrogate),
      failures_(seed, stream::kFailures) {
  params_.Validate();
}

const ObjectState& Surrogate::Step(double commanded, double dt) {
  state_ = SurrogateStep(state_, commanded, params_, dt, disturbance_, failures_);
  return state_;
}

// -------------------------------------------------------------------- game

const char* ToString(GameMode mode) {
  return mode == GameMode::kDiscrete ? "discrete" : "continuous";
}

const char* ToString(ScoringRule rule) {
  return rule == ScoringRule::kPostHold ? "post_hold" : "every_in_band";
}

GameMode ParseGameMode(const std::string& text) {
  if (text == "discrete") { return GameMode::kDiscrete; }
  if (text == "continuous") { return GameMode::kContinuous; }
  throw std::invalid_argument(fmt::format("unknown game mode '{}' (discrete|continuous)", text));
}

ScoringRule ParseScoringRule(const std::string& text) {
  if (text == "post_hold") { return ScoringRule::kPostHold; }
  if (text == "every_in_band") { return ScoringRule::kEveryInBand; }
  throw std::invalid_argument(
      fmt::format("unknown scoring rule '{}' (post_hold|every_in_band)", text));
}

void TargetParams::Validate() const {
  FieldChecker c("target params");
  c.Check(range_deg > 0.0 && range_deg <= 180.0, "range_deg");
  c.Check(dwell_min_s > 0.0, "dwell_min_s");
  c.Check(dwell_max_s >= dwell_min_s, "dwell_max_s");
  c.Check(cutoff_hz > 0.0, "cutoff_hz");
  c.Check(rate_max_deg_s > 0.0, "rate_max_deg_s");
  c.Check(rate_hold_s > 0.0, "rate_hold_s");
  c.ThrowIfAny();
}

void GameConfig::Validate() const {
  FieldChecker c("game config");
  c.Check(reached_band > 0.0, "reached_band");
  c.Check(warn_band > reached_band, "warn_band");
  c.Check(hold_time > 0.0, "hold_time");
  c.Check(refresh_rate > 0.0, "refresh_rate");
  c.Check(host_rate > 0.0, "host_rate");
  c.Check(session_duration > 0.0, "session_duration");
  if (refresh_rate > 0.0 && host_rate > 0.0) {
    const double ratio = host_rate / refresh_rate;
    c.Check(ratio >= 1.0 && std::abs(ratio - std::round(ratio)) < 1e-9, "host_rate");
  }
  c.Nested("targets", [this] { targets.Validate(); });
  c.ThrowIfAny();
}

Zone ZoneOf(double error_deg, bool object_ok, const GameConfig& config) {
  return bihap::ZoneOf(error_deg, object_ok, config.reached_band, config.warn_band);
}

ScoreState FitCountStep(const ScoreState& state, double error_deg, bool object_ok, double dt,
                        const GameConfig& config) {
  ScoreState next = state;
  const bool in_band = object_ok && std::abs(error_deg) < config.reached_band;
  if (!in_band) {
    next.in_band = false;
    next.dwell = 0.0;
    next.score = 0;
    return next;
  }
  next.dwell = state.in_band ? state.dwell + dt : 0.0;
  next.in_band = true;
  if (config.scoring == ScoringRule::kEveryInBand) {
    next.score = 1;
  } else {
    next.score = next.dwell + 1e-9 >= config.hold_time ? 1 : 0;
  }
  next.fit_count += next.score;
  return next;
}

TargetTrajectory::TargetTrajectory(std::vector<double> samples, double sample_rate,
                                   bool piecewise_constant, std::vector<TargetSegment> segments)
    : samples_(std::move(samples)),
      sample_rate_(sample_rate),
      piecewise_constant_(piecewise_constant),
      segments_(std::move(segments)) {
  if (samples_.empty() || !(sample_rate_ > 0.0)) {
    throw std::invalid_argument("TargetTrajectory: need samples and a positive rate");
  }
}

std::size_t TargetTrajectory::IndexAt(double t) const {
  const double pos = std::floor(t * sample_rate_ + 1e-6);
  if (pos <= 0.0) { return 0; }
  return std::min(samples_.size() - 1, static_cast<std::size_t>(pos));
}

double TargetTrajectory::At(double t) const { return samples_[IndexAt(t)]; }

double TargetTrajectory::RateAt(double t) const {
  if (piecewise_constant_) { return 0.0; }
  const std::size_t i = IndexAt(t);
  if (i == 0) { return 0.0; }
  return (samples_[i] - samples_[i - 1]) * sample_rate_;
}

TargetTrajectory GenerateTargets(const GameConfig& config, uint64_t seed) {
  config.Validate();
  RngStream rng(seed, stream::kTargets);
  const TargetParams& tp = config.targets;
  const double range = DegToRad(tp.range_deg);
  const double rate = config.host_rate;
  const auto n = static_cast<std::size_t>(std::llround(config.session_duration * rate)) + 1;
  const auto per_refresh = static_cast<std::size_t>(std::llround(rate / config.refresh_rate));
  std::vector<double> samples(n);

  if (config.mode == GameMode::kDiscrete) {
    std::vector<TargetSegment> segments;
    std::size_t i = 0;
    while (i < n) {
      const double angle = rng.Uniform(-range, range);
      const double dwell = rng.Uniform(tp.dwell_min_s, tp.dwell_max_s);
      const auto refreshes =
          std::max<int64_t>(1, std::llround(dwell * config.refresh_rate));
      const std::size_t end = std::min(n, i + static_cast<std::size_t>(refreshes) * per_refresh);
      std::fill(samples.begin() + static_cast<std::ptrdiff_t>(i),
                samples.begin() + static_cast<std::ptrdiff_t>(end), angle);
      segments.push_back({static_cast<double>(i) / rate, static_cast<double>(end) / rate, angle});
      i = end;
    }
    return TargetTrajectory(std::move(samples), rate, true, std::move(segments));
  }

  // Two cascaded first-order low-passes on a uniform rate draw. Each stage
  // output is a convex combination of its inputs, so |rate| < rate_max.
  const double dt = 1.0 / rate;
  const double a = 1.0 - std::exp(-kTwoPi * tp.cutoff_hz * dt);
  const double vmax = DegToRad(tp.rate_max_deg_s);
  double y1 = 0.0;
  double y2 = 0.0;
  double pos = rng.Uniform(-range / 2.0, range / 2.0);
  const auto hold = std::max<int64_t>(1, std::llround(tp.rate_hold_s * rate));
  double draw = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    samples[i] = pos;
    if (static_cast<int64_t>(i) % hold == 0) { draw = rng.Uniform(-vmax, vmax); }
    y1 += a * (draw - y1);
    y2 += a * (y1 - y2);
    pos += y2 * dt;
    if (pos > range || pos < -range) {
      pos = std::clamp(2.0 * std::clamp(pos, -range, range) - pos, -range, range);
      y1 = -y1;
      y2 = -y2;
      draw = -draw;
    }
  }
  return TargetTrajectory(std::move(samples), rate, false);
}

// ---------------------------------------------------------------- operator

void OperatorParams::Validate() const {
  FieldChecker c("operator params");
  c.Check(std::isfinite(reaction_delay) && reaction_delay >= 0.0, "reaction_delay");
  c.Check(std::isfinite(gain) && gain >= 0.0, "gain");
  c.Check(std::isfinite(noise_std) && noise_std >= 0.0, "noise_std");
  c.Check(cue_delay_factor >= 0.0 && cue_delay_factor <= 1.0, "cue_delay_factor");
  c.ThrowIfAny();
}

bool HasHapticCue(const FeedbackCommand& command) {
  if (command.torque != 0.0) { return true; }
  // Failure vibration is an alarm, not a rendered torque.
  return command.vibration.has_value() && command.visual_zone != Zone::kFail;
}

double OperatorRate(const OperatorParams& params, double delayed_error, double noise) {
  return params.gain * (delayed_error + noise);
}

namespace {
constexpr double kRelaxRate = 0.75;
}  // namespace

ScriptedOperator::ScriptedOperator(const OperatorParams& params, uint64_t seed)
    : params_(params), rng_(seed, stream::kOperator) {
  params_.Validate();
}

OperatorInput ScriptedOperator::Step(const OperatorObservation& obs,
                                     const FeedbackCommand& feedback, double dt) {
  if (!(dt > 0.0)) { throw std::invalid_argument("ScriptedOperator: dt must be > 0"); }
  const double noise = rng_.Normal(params_.noise_std);
  history_.emplace_back(obs.t, obs.error);

  effective_delay_ = params_.reaction_delay;
  if (params_.uses_torque_cue && HasHapticCue(feedback)) {
    effective_delay_ *= params_.cue_delay_factor;
  }
  // Perception never runs backwards: when the cue ends, perceived time
  // advances at kRelaxRate until the uncued delay is restored.
  seen_at_ = std::max(seen_at_ + kRelaxRate * dt, obs.t - effective_delay_);
  double delayed = 0.0;
  bool found = false;
  for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
    if (it->first <= seen_at_ + 1e-9) {
      delayed = it->second;
      found = true;
      break;
    }
  }
  while (history_.size() > 1 && history_[1].first <= obs.t - params_.reaction_delay - 1e-9) {
    history_.pop_front();
  }

  OperatorInput in;
  in.rate = found ? OperatorRate(params_, delayed, noise) : 0.0;
  return in;
}

// ----------------------------------------------------------------- session

void SessionConfig::Validate() const {
  FieldChecker c("session config");
  c.Nested("game", [this] { game.Validate(); });
  c.Nested("surrogate", [this] { surrogate.Validate(); });
  c.Nested("strategy", [this] { strategy.Validate(); });
  c.Nested("device", [this] { device.Validate(); });
  c.Nested("downlink", [this] { downlink.Validate(); });
  c.Nested("uplink", [this] { uplink.Validate(); });
  c.Check(sensors.imu_period_us > 0, "sensors.imu_period_us");
  c.Check(sensors.torque_sensor_period_us > 0, "sensors.torque_sensor_period_us");
  if (device.tick_us > 0 && game.host_rate > 0.0) {
    const double per_host = 1e6 / game.host_rate / static_cast<double>(device.tick_us);
    c.Check(per_host >= 1.0 && std::abs(per_host - std::round(per_host)) < 1e-9,
            "game.host_rate");
  }
  c.ThrowIfAny();
}

namespace {

AudioCue Louder(AudioCue a, AudioCue b) {
  return static_cast<uint8_t>(a) >= static_cast<uint8_t>(b) ? a : b;
}

}  // namespace

SessionLog RunSession(const SessionConfig& config, OperatorSource& source,
                      const RefreshCallback& on_refresh) {
  config.Validate();
  namespace p = protocol;

  const GameConfig& game = config.game;
  const int64_t tick_us = config.device.tick_us;
  const double dt = static_cast<double>(tick_us) * 1e-6;
  const int64_t host_every = TicksPer(game.host_rate, tick_us);
  const int64_t refresh_every = TicksPer(game.refresh_rate, tick_us);
  const int64_t flywheel_every = TicksPer(100.0, tick_us);
  const double host_dt = static_cast<double>(host_every) * dt;
  const double refresh_dt = static_cast<double>(refresh_every) * dt;
  const auto refreshes = std::llround(game.session_duration * game.refresh_rate);
  const int64_t ticks = refreshes * refresh_every;

  const TargetTrajectory targets = GenerateTargets(game, config.seed);
  DeviceLoop device(config.device);
  SensorSuite sensors(config.sensors, config.seed);
  SimLink downlink(config.downlink, config.seed, stream::kLinkDown);
  SimLink uplink(config.uplink, config.seed, stream::kLinkUp);
  Surrogate surrogate(config.surrogate, config.seed);
  FeedbackStrategy strategy(config.strategy);
  KinematicsEstimator imu_estimate(Axis::kYaw);
  p::SequenceCounter host_seq;
  p::SequenceCounter device_seq;
  p::SequenceTracker command_tracker;
  p::SequenceTracker mode_tracker;
  p::SequenceTracker imu_tracker;
  p::SequenceTracker flywheel_tracker;

  SessionLog log;
  log.seed = config.seed;
  log.rows.reserve(static_cast<std::size_t>(refreshes));

  double device_angle = 0.0;
  double device_rate = 0.0;
  double object_command = 0.0;
  bool have_imu = false;
  OutputMode reported_mode = OutputMode::kTorque;
  double last_target = targets.At(0.0);
  ScoreState score;
  AudioCue pending_audio = AudioCue::kNone;
  bool input_frozen = false;
  FeedbackCommand command;

  for (int64_t k = 0; k < ticks; ++k) {
    const int64_t t_us = k * tick_us;
    const double t = static_cast<double>(t_us) * 1e-6;

    if (k % host_every == 0) {
      // Host: telemetry in.
      for (const auto& m : uplink.Poll(t)) {
        if (const auto* imu = std::get_if<p::ImuTelemetry>(&m.payload)) {
          if (!imu_tracker.Accept(m.sequence)) { continue; }
          OrientationSample s;
          s.roll = imu->roll;
          s.pitch = imu->pitch;
          s.yaw = imu->yaw;
          s.angular_rate = {imu->rate_x, imu->rate_y, imu->rate_z};
          s.timestamp_us = static_cast<int64_t>(m.timestamp_us);
          imu_estimate.Push(s);
          have_imu = true;
        } else if (const auto* fw = std::get_if<p::FlywheelTelemetry>(&m.payload)) {
          if (!flywheel_tracker.Accept(m.sequence)) { continue; }
          reported_mode = fw->mode >= 0.5f ? OutputMode::kVibration : OutputMode::kTorque;
        }
      }
      if (have_imu) {
        const double yaw = imu_estimate.Estimate().kinematics.theta;
        object_command += WrapPi(yaw - object_command);
      }

      // Host: feedback strategy.
      const double target = targets.At(t);
      if (targets.piecewise_constant() && target != last_target) {
        strategy.ResetHistory();
        last_target = target;
      }
      const ObjectState& obj = surrogate.state();
      StrategyInput in;
      in.desired = {WrapPi(target), targets.RateAt(t), 0.0};
      in.actual = {WrapPi(obj.angle), obj.velocity, 0.0};
      in.object_ok = obj.ok;
      in.saturation_mode = reported_mode;
      in.t = t;
      in.dt = host_dt;
      const StrategyOutput& out = strategy.Step(in);
      command = out.command;
      pending_audio = Louder(pending_audio, command.audio_cue);
      if (HasHapticCue(command)) { ++log.cue_ticks; }

      p::Message msg;
      msg.timestamp_us = static_cast<uint64_t>(t_us);
      if (command.vibration) {
        msg.sequence = host_seq.Next(p::Kind::kFeedbackModeCommand);
        msg.payload = p::FeedbackModeCommand{1.0f, static_cast<float>(command.vibration->amplitude),
                                             static_cast<float>(command.vibration->angular_frequency)};
      } else {
        msg.sequence = host_seq.Next(p::Kind::kTorqueCommand);
        msg.payload = p::TorqueCommand{static_cast<float>(command.torque)};
      }
      downlink.Send(msg, t);

      // Scoring and log at refresh boundaries.
      if (k % refresh_every == 0) {
        score = FitCountStep(score, out.error_deg, obj.ok, refresh_dt, game);
        SessionRow row;
        row.t = t;
        row.device_deg = RadToDeg(device_angle);
        row.object_deg = RadToDeg(obj.angle);
        row.target_deg = RadToDeg(target);
        row.error_deg = out.error_deg;
        row.zone = ZoneOf(out.error_deg, obj.ok, game);
        row.scenario = out.state.scenario;
        row.score = score.score;
        row.fit_count = score.fit_count;
        row.torque = command.torque;
        row.vibration = command.vibration ? command.vibration->amplitude : 0.0;
        row.audio = pending_audio;
        row.object_ok = obj.ok;
        row.input_frozen = input_frozen;
        row.device_mode = reported_mode;
        pending_audio = AudioCue::kNone;
        log.rows.push_back(row);
        if (on_refresh) { on_refresh(row); }
      }

      // Operator reacts to what the host shows and the device renders.
      OperatorObservation ob;
      ob.t = t;
      ob.error = WrapPi(target - obj.angle);
      ob.target = target;
      ob.object = obj.angle;
      ob.device_angle = device_angle;
      ob.object_ok = obj.ok;
      const OperatorInput input = source.Step(ob, command, host_dt);
      if (input.disconnected) {
        log.aborted = true;
        log.abort_reason = "operator source disconnected";
        break;
      }
      input_frozen = input.frozen;
      if (input.angle) {
        device_angle = *input.angle;
        device_rate = 0.0;
      } else {
        device_rate = input.rate;
      }
    }

    // Device: commands in, control tick, sensors, telemetry out.
    for (const auto& m : downlink.Poll(t)) {
      device.OnHostAlive();
      if (const auto* tc = std::get_if<p::TorqueCommand>(&m.payload)) {
        if (command_tracker.Accept(m.sequence)) { device.OnTorqueCommand(tc->tau_d); }
      } else if (const auto* fm = std::get_if<p::FeedbackModeCommand>(&m.payload)) {
        if (mode_tracker.Accept(m.sequence)) {
          if (fm->mode >= 0.5f) {
            device.OnVibrationCommand(fm->amplitude, fm->angular_frequency);
          } else {
            device.OnVibrationCommand(0.0, 0.0);
          }
        }
      }
    }
    Attitude attitude;
    attitude.yaw = device_angle;
    attitude.rate = {0.0, 0.0, device_rate};
    const SensorReadout readout = sensors.Sample(attitude, 0.0, t_us);
    const DeviceTick tick = device.Tick();
    if (readout.orientation) {
      const OrientationSample& s = *readout.orientation;
      p::Message m;
      m.sequence = device_seq.Next(p::Kind::kImuTelemetry);
      m.timestamp_us = static_cast<uint64_t>(t_us);
      m.payload = p::ImuTelemetry{static_cast<float>(s.roll), static_cast<float>(s.pitch),
                                  static_cast<float>(s.yaw), static_cast<float>(s.angular_rate[0]),
                                  static_cast<float>(s.angular_rate[1]),
                                  static_cast<float>(s.angular_rate[2])};
      uplink.Send(m, t);
    }
    if (k % flywheel_every == 0) {
      p::Message m;
      m.sequence = device_seq.Next(p::Kind::kFlywheelTelemetry);
      m.timestamp_us = static_cast<uint64_t>(t_us);
      m.payload = p::FlywheelTelemetry{
          static_cast<float>(device.flywheel().angle), static_cast<float>(tick.omega),
          static_cast<float>(tick.reaction_torque), static_cast<float>(tick.desired_torque),
          static_cast<float>(static_cast<int>(tick.mode))};
      uplink.Send(m, t);
    }

    surrogate.Step(object_command, dt);
    device_angle += device_rate * dt;
  }

  log.fit_count = score.fit_count;
  return log;
}

void WriteSessionCsv(std::ostream& out, const SessionLog& log) {
  out << kSessionCsvHeader << '\n';
  for (const auto& r : log.rows) {
    out << Num(r.t) << ',' << Num(r.device_deg) << ',' << Num(r.object_deg) << ','
        << Num(r.target_deg) << ',' << Num(r.error_deg) << ',' << bihap::ToString(r.zone) << ','
        << bihap::ToString(r.scenario) << ',' << r.score << ',' << r.fit_count << ','
        << Num(r.torque) << ',' << Num(r.vibration) << ',' << bihap::ToString(r.audio) << ','
        << (r.object_ok ? 1 : 0) << ',' << (r.input_frozen ? 1 : 0) << ','
        << bihap::ToString(r.device_mode) << '\n';
  }
}

}  // namespace bihap::teleop
