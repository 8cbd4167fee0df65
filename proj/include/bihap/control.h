#pragma once

/// @file
///
/// Device-side velocity regulation of the flywheel.

#include <array>
#include <cstdint>

namespace bihap {

struct PidGains {
  double kp = 0.2;
  double ki = 20.0;
  double kd = 0.0;
};

/// Discrete PID on velocity error producing a motor voltage.
///
/// Anti-windup: the integral is only advanced on ticks where the unclamped
/// output stays inside the limit, and is additionally clamped to
/// +-output_limit / ki.
class PidController {
 public:
  explicit PidController(const PidGains& gains = {}, double output_limit = 12.0);

  /// Throws std::invalid_argument on non-finite inputs or dt <= 0.
  double Step(double target, double measured, double dt);

  void Reset();

  /// Replaces the gains, keeping the accumulated state (re-clamped).
  void SetGains(const PidGains& gains);

  const PidGains& gains() const { return gains_; }
  double output_limit() const { return output_limit_; }
  double integral() const { return integral_; }
  double previous_error() const { return previous_error_; }

 private:
  double IntegralLimit() const;

  PidGains gains_;
  double output_limit_;
  double integral_ = 0.0;        // sum of e·dt, rad
  double previous_error_ = 0.0;  // rad/s
  bool has_previous_ = false;
};

/// Converts a desired reaction torque into a new flywheel velocity setpoint.
/// Tracking the returned setpoint yields a reaction torque close to tau_d.
double TorqueToSetpoint(double tau_d, double current_setpoint, double dt,
                        double inertia);

enum class OutputMode : uint8_t { kTorque = 0, kVibration = 1 };

const char* ToString(OutputMode mode);

/// Flywheel speed saturation with hysteresis.
class SaturationMonitor {
 public:
  SaturationMonitor(double omega_max = 300.0, double omega_resume = 250.0);

  OutputMode Update(double omega);

  OutputMode mode() const { return mode_; }
  double omega_max() const { return omega_max_; }
  double omega_resume() const { return omega_resume_; }

 private:
  OutputMode mode_ = OutputMode::kTorque;
  double omega_max_;
  double omega_resume_;
};

/// Pure transition rule used by SaturationMonitor.
OutputMode NextOutputMode(OutputMode previous, double omega, double omega_max,
                          double omega_resume);

/// Flywheel speed from encoder codes, differenced across a short window.
class EncoderVelocityEstimator {
 public:
  static constexpr int kWindow = 4;

  explicit EncoderVelocityEstimator(double tick_dt = 1e-3) : tick_dt_(tick_dt) {}

  /// Feeds one code per control tick and returns the current estimate.
  double Update(int32_t code);

  void Reset();

 private:
  double tick_dt_;
  std::array<int32_t, kWindow + 1> codes_{};
  int count_ = 0;
  int head_ = 0;
};

}  // namespace bihap
