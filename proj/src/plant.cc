#include "bihap/plant.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "bihap/angles.h"

namespace bihap {

namespace {

void RequirePositive(double value, const char* name) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw std::invalid_argument(
        fmt::format("MotorParams.{} must be finite and > 0 (got {})", name,
                    value));
  }
}

}  // namespace

void MotorParams::Validate() const {
  RequirePositive(torque_constant, "torque_constant");
  RequirePositive(winding_resistance, "winding_resistance");
  RequirePositive(back_emf_constant, "back_emf_constant");
  RequirePositive(max_voltage, "max_voltage");
  RequirePositive(flywheel_inertia, "flywheel_inertia");
  if (!std::isfinite(viscous_friction) || viscous_friction < 0.0) {
    throw std::invalid_argument(fmt::format(
        "MotorParams.viscous_friction must be finite and >= 0 (got {})",
        viscous_friction));
  }
}

MotorStep StepMotor(const FlywheelState& state, double voltage, double dt,
                    const MotorParams& params) {
  if (!std::isfinite(dt) || dt <= 0.0) {
    throw std::invalid_argument(fmt::format("StepMotor: dt must be > 0 (got {})", dt));
  }
  if (!std::isfinite(voltage) || !std::isfinite(state.angle) ||
      !std::isfinite(state.angular_velocity)) {
    throw std::invalid_argument(fmt::format(
        "StepMotor: non-finite input (voltage={}, angle={}, omega={})", voltage,
        state.angle, state.angular_velocity));
  }

  const double omega = state.angular_velocity;
  const double applied =
      std::clamp(voltage, -params.max_voltage, params.max_voltage);

  double electrical_torque = 0.0;
  if (applied != 0.0) {
    const double current =
        (applied - params.back_emf_constant * omega) / params.winding_resistance;
    electrical_torque = params.torque_constant * current;
  }
  const double net_torque = electrical_torque - params.viscous_friction * omega;

  MotorStep result;
  result.state.angular_velocity =
      omega + (net_torque / params.flywheel_inertia) * dt;
  result.state.angle = state.angle + result.state.angular_velocity * dt;
  result.reaction_torque = -net_torque;
  result.applied_voltage = applied;
  return result;
}

EncoderSample ReadEncoder(const FlywheelState& state, int64_t timestamp_us) {
  const double wrapped = WrapTwoPi(state.angle);
  auto code = static_cast<int32_t>(
      std::floor(wrapped / kTwoPi * static_cast<double>(kEncoderCounts)));
  code = std::clamp<int32_t>(code, 0, kEncoderCounts - 1);
  return {code, timestamp_us};
}

SensorSuite::SensorSuite(const SensorConfig& config, uint64_t seed)
    : config_(config),
      torque_rng_(seed, stream::kTorqueSensor),
      imu_rng_(seed, stream::kImu) {
  if (config_.imu_period_us <= 0 || config_.torque_sensor_period_us <= 0) {
    throw std::invalid_argument("SensorConfig: periods must be > 0");
  }
  if (!(config_.torque_noise_std >= 0.0) || !(config_.imu_noise_std >= 0.0)) {
    throw std::invalid_argument("SensorConfig: noise std must be >= 0");
  }
}

SensorReadout SensorSuite::Sample(const Attitude& attitude,
                                  double reaction_torque,
                                  int64_t timestamp_us) {
  SensorReadout out;
  if (timestamp_us % config_.imu_period_us == 0) {
    OrientationSample sample;
    sample.roll = WrapPi(attitude.roll + imu_rng_.Normal(config_.imu_noise_std));
    sample.pitch = WrapPi(attitude.pitch + imu_rng_.Normal(config_.imu_noise_std));
    sample.yaw = WrapPi(attitude.yaw + imu_rng_.Normal(config_.imu_noise_std));
    sample.angular_rate = attitude.rate;
    sample.timestamp_us = timestamp_us;
    out.orientation = sample;
  }
  if (timestamp_us % config_.torque_sensor_period_us == 0) {
    const double measured =
        reaction_torque + torque_rng_.Normal(config_.torque_noise_std);
    out.torque = TorqueSensorSample{
        std::clamp(measured, -kTorqueSensorFullScale, kTorqueSensorFullScale),
        timestamp_us};
  }
  return out;
}

}  // namespace bihap
