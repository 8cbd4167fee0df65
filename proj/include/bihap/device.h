#pragma once

/// @file
///
/// The device firmware loop: turns torque / vibration commands into flywheel
/// motion at the control rate, with speed-saturation fallback and a
/// command-loss fail-safe.

#include <cstdint>

#include "bihap/control.h"
#include "bihap/plant.h"

namespace bihap {

struct DeviceConfig {
  MotorParams motor;
  PidGains pid;
  double output_limit = 12.0;    // V
  double omega_max = 300.0;      // rad/s
  double omega_resume = 250.0;   // rad/s
  int64_t tick_us = 1000;        // 1 kHz

  /// Velocity setpoint is held inside +-setpoint_limit so the PID never
  /// chases speeds beyond what the supply can reach.
  double setpoint_limit = 330.0;
  /// Torque used to bleed flywheel speed while in vibration mode.
  double spin_down_torque = 0.005;
  /// Vibration used when a torque command arrives while saturated.
  double vibration_amplitude_max = 0.03;
  double vibration_frequency_hz = 40.0;

  /// Fail-safe: commands are held for command_hold_s after the last one
  /// received, then ramp linearly to zero over command_ramp_s.
  double command_hold_s = 0.1;
  double command_ramp_s = 0.4;
  /// Silence longer than this raises the heartbeat-loss flag.
  double heartbeat_timeout_s = 1.0;

  void Validate() const;
};

struct DeviceTick {
  int64_t time_us = 0;
  double reaction_torque = 0.0;
  double omega = 0.0;
  double omega_measured = 0.0;
  double setpoint = 0.0;
  double voltage = 0.0;
  /// Torque the loop is trying to render this tick (after fail-safe
  /// scaling, including any vibration waveform).
  double desired_torque = 0.0;
  OutputMode mode = OutputMode::kTorque;
  bool heartbeat_lost = false;
};

class DeviceLoop {
 public:
  explicit DeviceLoop(const DeviceConfig& config = {});

  void OnTorqueCommand(double tau_d);
  /// Host-requested vibration (amplitude 0 returns to torque rendering).
  void OnVibrationCommand(double amplitude, double angular_frequency);
  void OnGainUpdate(const PidGains& gains);
  /// Any datagram from the host counts as a sign of life.
  void OnHostAlive();

  /// Advances one control tick.
  DeviceTick Tick();

  int64_t time_us() const { return time_us_; }
  double time_s() const { return static_cast<double>(time_us_) * 1e-6; }
  const FlywheelState& flywheel() const { return flywheel_; }
  OutputMode mode() const { return saturation_.mode(); }
  const DeviceConfig& config() const { return config_; }
  /// Fraction of the last command still applied, in [0, 1].
  double FailSafeScale() const;

 private:
  double DesiredTorque(double t) const;

  DeviceConfig config_;
  PidController pid_;
  SaturationMonitor saturation_;
  EncoderVelocityEstimator velocity_;
  FlywheelState flywheel_;
  int64_t time_us_ = 0;
  double setpoint_ = 0.0;

  double torque_command_ = 0.0;
  double vibration_amplitude_ = 0.0;
  double vibration_omega_ = 0.0;
  bool have_command_ = false;
  int64_t last_command_us_ = 0;
  int64_t last_alive_us_ = 0;
};

}  // namespace bihap
