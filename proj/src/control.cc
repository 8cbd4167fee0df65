#include "bihap/control.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "bihap/angles.h"
#include "bihap/plant.h"

namespace bihap {

PidController::PidController(const PidGains& gains, double output_limit)
    : gains_(gains), output_limit_(output_limit) {
  if (!std::isfinite(output_limit) || output_limit <= 0.0) {
    throw std::invalid_argument("PidController: output_limit must be > 0");
  }
  if (!std::isfinite(gains.kp) || !std::isfinite(gains.ki) ||
      !std::isfinite(gains.kd)) {
    throw std::invalid_argument("PidController: gains must be finite");
  }
}

double PidController::IntegralLimit() const {
  return gains_.ki > 0.0 ? output_limit_ / gains_.ki
                         : std::numeric_limits<double>::infinity();
}

double PidController::Step(double target, double measured, double dt) {
  if (!std::isfinite(dt) || dt <= 0.0) {
    throw std::invalid_argument(fmt::format("PidController: dt must be > 0 (got {})", dt));
  }
  if (!std::isfinite(target) || !std::isfinite(measured)) {
    throw std::invalid_argument("PidController: non-finite target or measurement");
  }

  const double error = target - measured;
  const double candidate = std::clamp(integral_ + error * dt, -IntegralLimit(),
                                      IntegralLimit());
  const double derivative =
      has_previous_ ? (error - previous_error_) / dt : 0.0;
  const double unclamped =
      gains_.kp * error + gains_.ki * candidate + gains_.kd * derivative;

  if (std::abs(unclamped) <= output_limit_) { integral_ = candidate; }
  const double output = std::clamp(unclamped, -output_limit_, output_limit_);

  previous_error_ = error;
  has_previous_ = true;
  return output;
}

void PidController::Reset() {
  integral_ = 0.0;
  previous_error_ = 0.0;
  has_previous_ = false;
}

void PidController::SetGains(const PidGains& gains) {
  gains_ = gains;
  integral_ = std::clamp(integral_, -IntegralLimit(), IntegralLimit());
}

double TorqueToSetpoint(double tau_d, double current_setpoint, double dt,
                        double inertia) {
  if (!(inertia > 0.0)) {
    throw std::invalid_argument("TorqueToSetpoint: inertia must be > 0");
  }
  // Reaction torque is -I·dω/dt, so a positive reaction needs deceleration.
  return current_setpoint - (tau_d / inertia) * dt;
}

const char* ToString(OutputMode mode) {
  switch (mode) {
    case OutputMode::kTorque: return "torque";
    case OutputMode::kVibration: return "vibration";
  }
  return "?";
}

OutputMode NextOutputMode(OutputMode previous, double omega, double omega_max,
                          double omega_resume) {
  const double speed = std::abs(omega);
  switch (previous) {
    case OutputMode::kTorque:
      return speed >= omega_max ? OutputMode::kVibration : OutputMode::kTorque;
    case OutputMode::kVibration:
      return speed <= omega_resume ? OutputMode::kTorque : OutputMode::kVibration;
  }
  return previous;
}

SaturationMonitor::SaturationMonitor(double omega_max, double omega_resume)
    : omega_max_(omega_max), omega_resume_(omega_resume) {
  if (!(omega_resume >= 0.0) || !(omega_resume < omega_max)) {
    throw std::invalid_argument(fmt::format(
        "SaturationMonitor: need 0 <= omega_resume < omega_max (got {}, {})",
        omega_resume, omega_max));
  }
}

OutputMode SaturationMonitor::Update(double omega) {
  mode_ = NextOutputMode(mode_, omega, omega_max_, omega_resume_);
  return mode_;
}

double EncoderVelocityEstimator::Update(int32_t code) {
  codes_[head_] = code;
  const int newest = head_;
  head_ = (head_ + 1) % static_cast<int>(codes_.size());
  count_ = std::min(count_ + 1, static_cast<int>(codes_.size()));
  if (count_ < 2) { return 0.0; }

  const int span = count_ - 1;
  const int oldest =
      (newest - span + static_cast<int>(codes_.size())) % static_cast<int>(codes_.size());
  int32_t delta = codes_[newest] - codes_[oldest];
  // Shortest way around the 14-bit circle.
  if (delta >= kEncoderCounts / 2) { delta -= kEncoderCounts; }
  if (delta < -kEncoderCounts / 2) { delta += kEncoderCounts; }
  return static_cast<double>(delta) * kTwoPi /
         static_cast<double>(kEncoderCounts) / (span * tick_dt_);
}

void EncoderVelocityEstimator::Reset() {
  count_ = 0;
  head_ = 0;
}

}  // namespace bihap
