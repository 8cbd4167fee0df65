#include "bihap/device.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bihap/angles.h"
#include "bihap/config_error.h"

namespace bihap {

void DeviceConfig::Validate() const {
  FieldChecker c("device config");
  c.Nested("motor", [this] { motor.Validate(); });
  c.Check(std::isfinite(pid.kp) && pid.kp >= 0.0, "pid.kp");
  c.Check(std::isfinite(pid.ki) && pid.ki >= 0.0, "pid.ki");
  c.Check(std::isfinite(pid.kd) && pid.kd >= 0.0, "pid.kd");
  c.Check(tick_us > 0, "tick_us");
  c.Check(std::isfinite(output_limit) && output_limit > 0.0, "output_limit");
  c.Check(omega_resume > 0.0 && omega_resume < omega_max, "omega_resume");
  c.Check(setpoint_limit > 0.0, "setpoint_limit");
  c.Check(spin_down_torque >= 0.0, "spin_down_torque");
  c.Check(command_hold_s >= 0.0, "command_hold_s");
  c.Check(command_ramp_s > 0.0, "command_ramp_s");
  // The fail-safe must reach zero within 1 s.
  c.Check(command_hold_s + command_ramp_s <= 1.0, "command_ramp_s");
  c.ThrowIfAny();
}

DeviceLoop::DeviceLoop(const DeviceConfig& config)
    : config_(config),
      pid_(config.pid, config.output_limit),
      saturation_(config.omega_max, config.omega_resume),
      velocity_(static_cast<double>(config.tick_us) * 1e-6) {
  config_.Validate();
}

void DeviceLoop::OnTorqueCommand(double tau_d) {
  if (!std::isfinite(tau_d)) { return; }
  torque_command_ = tau_d;
  vibration_amplitude_ = 0.0;
  have_command_ = true;
  last_command_us_ = time_us_;
  last_alive_us_ = time_us_;
}

void DeviceLoop::OnVibrationCommand(double amplitude, double angular_frequency) {
  if (!std::isfinite(amplitude) || !std::isfinite(angular_frequency)) { return; }
  vibration_amplitude_ = std::max(0.0, amplitude);
  vibration_omega_ = angular_frequency;
  have_command_ = true;
  last_command_us_ = time_us_;
  last_alive_us_ = time_us_;
}

void DeviceLoop::OnGainUpdate(const PidGains& gains) {
  pid_.SetGains(gains);
  last_alive_us_ = time_us_;
}

void DeviceLoop::OnHostAlive() { last_alive_us_ = time_us_; }

double DeviceLoop::FailSafeScale() const {
  if (!have_command_) { return 0.0; }
  const double silence =
      static_cast<double>(time_us_ - last_command_us_) * 1e-6;
  if (silence <= config_.command_hold_s) { return 1.0; }
  const double ramp = (silence - config_.command_hold_s) / config_.command_ramp_s;
  return std::clamp(1.0 - ramp, 0.0, 1.0);
}

double DeviceLoop::DesiredTorque(double t) const {
  const double scale = FailSafeScale();
  if (scale == 0.0) { return 0.0; }
  if (vibration_amplitude_ > 0.0) {
    return scale * vibration_amplitude_ * std::sin(vibration_omega_ * t);
  }
  if (saturation_.mode() == OutputMode::kVibration) {
    const double amplitude =
        std::min(std::abs(torque_command_), config_.vibration_amplitude_max);
    return scale * amplitude *
           std::sin(kTwoPi * config_.vibration_frequency_hz * t);
  }
  return scale * torque_command_;
}

DeviceTick DeviceLoop::Tick() {
  const double dt = static_cast<double>(config_.tick_us) * 1e-6;
  const double t = time_s();
  const double inertia = config_.motor.flywheel_inertia;

  const double omega_measured =
      velocity_.Update(ReadEncoder(flywheel_, time_us_).code);
  const OutputMode mode = saturation_.Update(omega_measured);

  const double desired = DesiredTorque(t);
  setpoint_ = TorqueToSetpoint(desired, setpoint_, dt, inertia);
  if (mode == OutputMode::kVibration) {
    const double bleed =
        std::min(std::abs(setpoint_), config_.spin_down_torque / inertia * dt);
    setpoint_ -= Sign(setpoint_) * bleed;
  }
  setpoint_ = std::clamp(setpoint_, -config_.setpoint_limit, config_.setpoint_limit);

  const double voltage = pid_.Step(setpoint_, omega_measured, dt);
  const MotorStep step = StepMotor(flywheel_, voltage, dt, config_.motor);
  flywheel_ = step.state;

  DeviceTick tick;
  tick.time_us = time_us_;
  tick.reaction_torque = step.reaction_torque;
  tick.omega = flywheel_.angular_velocity;
  tick.omega_measured = omega_measured;
  tick.setpoint = setpoint_;
  tick.voltage = step.applied_voltage;
  tick.desired_torque = desired;
  tick.mode = mode;
  tick.heartbeat_lost =
      static_cast<double>(time_us_ - last_alive_us_) * 1e-6 >
      config_.heartbeat_timeout_s;

  time_us_ += config_.tick_us;
  return tick;
}

}  // namespace bihap
