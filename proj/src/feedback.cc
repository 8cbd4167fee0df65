#include "bihap/feedback.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "bihap/angles.h"

namespace bihap {

void ImpedanceGains::Validate() const {
  if (!(k_rot >= 0.0) || !(b_rot >= 0.0) || !(m_rot >= 0.0) ||
      !std::isfinite(k_rot) || !std::isfinite(b_rot) || !std::isfinite(m_rot)) {
    throw std::invalid_argument(fmt::format(
        "ImpedanceGains must be finite and >= 0 (k_rot={}, b_rot={}, m_rot={})",
        k_rot, b_rot, m_rot));
  }
}

double ImpedanceTorque(const Kinematics& desired, const Kinematics& actual,
                       const ImpedanceGains& gains) {
  const double values[] = {desired.theta,      desired.theta_dot,
                           desired.theta_ddot, actual.theta,
                           actual.theta_dot,   actual.theta_ddot,
                           gains.k_rot,        gains.b_rot,
                           gains.m_rot};
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("ImpedanceTorque: non-finite input");
    }
  }
  const double position_error = WrapPi(desired.theta - actual.theta);
  return gains.k_rot * position_error +
         gains.b_rot * (desired.theta_dot - actual.theta_dot) +
         gains.m_rot * (desired.theta_ddot - actual.theta_ddot);
}

double VibrationSignal(double alpha, double omega, double t) {
  if (alpha == 0.0) { return 0.0; }
  return alpha * std::sin(omega * t);
}

double KinematicsEstimator::Angle(const OrientationSample& s) const {
  switch (axis_) {
    case Axis::kRoll: return s.roll;
    case Axis::kPitch: return s.pitch;
    case Axis::kYaw: return s.yaw;
  }
  return 0.0;
}

double KinematicsEstimator::Rate(const OrientationSample& s) const {
  return s.angular_rate[static_cast<std::size_t>(axis_)];
}

void KinematicsEstimator::Push(const OrientationSample& sample) {
  samples_.push_back(sample);
  while (samples_.size() > kWindow) { samples_.pop_front(); }
}

KinematicsEstimate KinematicsEstimator::Estimate() const {
  KinematicsEstimate out;
  if (samples_.empty()) {
    out.degraded = true;
    return out;
  }
  const OrientationSample& latest = samples_.back();
  out.kinematics.theta = WrapPi(Angle(latest));
  out.kinematics.theta_dot = Rate(latest);
  if (samples_.size() < kMinSamples) {
    out.degraded = true;
    return out;
  }
  // Mean of the first differences across the window collapses to
  // (last - first) / elapsed.
  const OrientationSample& oldest = samples_.front();
  const double elapsed =
      static_cast<double>(latest.timestamp_us - oldest.timestamp_us) * 1e-6;
  if (elapsed <= 0.0) {
    out.degraded = true;
    return out;
  }
  out.kinematics.theta_ddot = (Rate(latest) - Rate(oldest)) / elapsed;
  return out;
}

KinematicsEstimate EstimateKinematics(const std::deque<OrientationSample>& samples,
                                      Axis axis) {
  KinematicsEstimator estimator(axis);
  for (const auto& s : samples) { estimator.Push(s); }
  return estimator.Estimate();
}

const char* ToString(Scenario scenario) {
  switch (scenario) {
    case Scenario::kTargetReached: return "TargetReached";
    case Scenario::kOvershot: return "Overshot";
    case Scenario::kNormal: return "Normal";
    case Scenario::kFarFromTarget: return "FarFromTarget";
    case Scenario::kFailure: return "Failure";
  }
  return "?";
}

const char* ToString(AudioCue cue) {
  switch (cue) {
    case AudioCue::kNone: return "None";
    case AudioCue::kDing: return "Ding";
    case AudioCue::kAlarm: return "Alarm";
  }
  return "?";
}

const char* ToString(Zone zone) {
  switch (zone) {
    case Zone::kWhite: return "White";
    case Zone::kBlue: return "Blue";
    case Zone::kGreen: return "Green";
    case Zone::kFail: return "Fail";
  }
  return "?";
}

FeedbackState ResetHistory(const FeedbackState& state) {
  FeedbackState out = state;
  out.crossed_target = false;
  out.approach_sign = 0;
  out.last_outside_sign = 0;
  out.dwell_timer = 0.0;
  return out;
}

void ClassifyConfig::Validate() const {
  if (!(reached_deg > 0.0) || !(reached_deg < warn_deg)) {
    throw std::invalid_argument(fmt::format(
        "ClassifyConfig: need 0 < reached_deg < warn_deg (got {}, {})",
        reached_deg, warn_deg));
  }
  if (!(far_dwell_s >= 0.0)) {
    throw std::invalid_argument("ClassifyConfig.far_dwell_s must be >= 0");
  }
}

FeedbackState Classify(double error_deg, const FeedbackState& state,
                       int velocity_sign, bool object_ok, double dt,
                       const ClassifyConfig& config) {
  FeedbackState next = state;
  const double magnitude = std::abs(error_deg);

  if (!object_ok) {
    next.scenario = Scenario::kFailure;
    next.dwell_timer = 0.0;
    return next;
  }

  if (magnitude < config.reached_deg) {
    if (state.scenario != Scenario::kTargetReached) {
      next.approach_sign = state.last_outside_sign;
    }
    next.crossed_target = true;
    next.scenario = Scenario::kTargetReached;
    next.dwell_timer = 0.0;
    return next;
  }

  const int side = Sign(error_deg);
  next.last_outside_sign = side;

  if (state.crossed_target && state.approach_sign != 0 &&
      side != state.approach_sign) {
    next.scenario = Scenario::kOvershot;
    next.dwell_timer = 0.0;
  } else if (magnitude < config.warn_deg) {
    next.scenario = Scenario::kNormal;
    next.dwell_timer = 0.0;
  } else {
    next.scenario = Scenario::kFarFromTarget;
    const bool was_far = state.scenario == Scenario::kFarFromTarget;
    if (velocity_sign < 0) {
      next.dwell_timer = 0.0;
    } else {
      next.dwell_timer = (was_far ? state.dwell_timer : 0.0) + dt;
    }
  }
  return next;
}

bool FarTorqueGateOpen(const FeedbackState& state, const ClassifyConfig& config) {
  return state.scenario == Scenario::kFarFromTarget &&
         state.dwell_timer >= config.far_dwell_s;
}

Zone ZoneOf(double error_deg, bool object_ok, double reached_deg, double warn_deg) {
  if (!object_ok) { return Zone::kFail; }
  const double magnitude = std::abs(error_deg);
  if (magnitude < reached_deg) { return Zone::kWhite; }
  if (magnitude < warn_deg) { return Zone::kBlue; }
  return Zone::kGreen;
}

void StrategyConfig::Validate() const {
  gains.Validate();
  classify.Validate();
  if (!(vibration_frequency_hz > 0.0) || !(vibration_amplitude_max >= 0.0) ||
      !(saturation_vibration_gain >= 0.0)) {
    throw std::invalid_argument("StrategyConfig: vibration parameters out of range");
  }
}

namespace {

void EmitTorque(double tau, OutputMode saturation_mode, const StrategyConfig& config,
                FeedbackCommand* command) {
  if (!config.torque_feedback) { return; }
  if (saturation_mode == OutputMode::kVibration) {
    const double amplitude = std::min(config.saturation_vibration_gain * std::abs(tau),
                                      config.vibration_amplitude_max);
    if (amplitude > 0.0) {
      command->vibration = Vibration{amplitude, kTwoPi * config.vibration_frequency_hz};
    }
    return;
  }
  command->torque = tau;
}

}  // namespace

StrategyOutput StrategyStep(const FeedbackState& state, const StrategyInput& input,
                            const StrategyConfig& config) {
  if (!(input.dt > 0.0)) {
    throw std::invalid_argument("StrategyStep: dt must be > 0");
  }
  StrategyOutput out;
  const double error_rad = WrapPi(input.desired.theta - input.actual.theta);
  out.error_deg = RadToDeg(error_rad);

  const double magnitude_rate =
      Sign(error_rad) * (input.desired.theta_dot - input.actual.theta_dot);
  const int velocity_sign = std::abs(magnitude_rate) <= config.velocity_deadband
                                ? 0
                                : Sign(magnitude_rate);

  out.state = Classify(out.error_deg, state, velocity_sign, input.object_ok,
                       input.dt, config.classify);
  out.impedance_torque = ImpedanceTorque(input.desired, input.actual, config.gains);

  FeedbackCommand& command = out.command;
  command.visual_zone = ZoneOf(out.error_deg, input.object_ok,
                               config.classify.reached_deg, config.classify.warn_deg);
  const bool entered = out.state.scenario != state.scenario;

  switch (out.state.scenario) {
    case Scenario::kTargetReached:
      if (entered) { command.audio_cue = AudioCue::kDing; }
      break;
    case Scenario::kOvershot:
      EmitTorque(out.impedance_torque, input.saturation_mode, config, &command);
      break;
    case Scenario::kNormal:
      break;
    case Scenario::kFarFromTarget:
      if (FarTorqueGateOpen(out.state, config.classify)) {
        EmitTorque(out.impedance_torque, input.saturation_mode, config, &command);
      }
      break;
    case Scenario::kFailure: {
      const double amplitude =
          std::min(std::abs(out.impedance_torque), config.vibration_amplitude_max);
      if (amplitude > 0.0) {
        command.vibration = Vibration{amplitude, kTwoPi * config.vibration_frequency_hz};
      }
      if (entered) { command.audio_cue = AudioCue::kAlarm; }
      break;
    }
  }
  return out;
}

FeedbackStrategy::FeedbackStrategy(const StrategyConfig& config) : config_(config) {
  config_.Validate();
}

const StrategyOutput& FeedbackStrategy::Step(const StrategyInput& input) {
  last_ = StrategyStep(last_.state, input, config_);
  return last_;
}

void FeedbackStrategy::ResetHistory() { last_.state = bihap::ResetHistory(last_.state); }

}  // namespace bihap
