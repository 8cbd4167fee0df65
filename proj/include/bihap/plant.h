#pragma once

/// @file
///
/// Fixed-timestep model of the gimbal BLDC motor driving the flywheel, plus
/// the encoder, IMU and bench torque sensor that observe it.

#include <array>
#include <cstdint>
#include <optional>

#include "bihap/rng.h"

namespace bihap {

/// First-order DC motor model; the FOC stage is treated as an ideal
/// voltage source on the q axis.
struct MotorParams {
  double torque_constant = 0.035;     // N·m/A
  double winding_resistance = 8.75;   // ohm
  double back_emf_constant = 0.035;   // V·s/rad
  double max_voltage = 12.0;          // V
  double viscous_friction = 1e-6;     // N·m·s/rad
  double flywheel_inertia = 4.8e-5;   // kg·m²

  /// Throws std::invalid_argument naming the offending field.
  void Validate() const;

  /// Largest torque the motor can produce from standstill.
  double StallTorque() const {
    return torque_constant * max_voltage / winding_resistance;
  }
};

struct FlywheelState {
  double angle = 0.0;             // rad, unbounded accumulator
  double angular_velocity = 0.0;  // rad/s
};

struct MotorStep {
  FlywheelState state;
  /// Torque on the housing (the operator's hand), equal and opposite to the
  /// net torque accelerating the flywheel.
  double reaction_torque = 0.0;
  /// Voltage actually applied after clamping.
  double applied_voltage = 0.0;
};

/// Advances the flywheel by one semi-implicit Euler step.
///
/// A command of exactly 0 V disables the driver output, so the windings
/// carry no current and the wheel coasts (only viscous friction acts).
/// Throws std::invalid_argument on non-finite inputs or dt <= 0.
MotorStep StepMotor(const FlywheelState& state, double voltage, double dt,
                    const MotorParams& params);

inline constexpr int kEncoderBits = 14;
inline constexpr int32_t kEncoderCounts = 1 << kEncoderBits;

struct EncoderSample {
  int32_t code = 0;  // [0, 16384)
  int64_t timestamp_us = 0;
};

EncoderSample ReadEncoder(const FlywheelState& state, int64_t timestamp_us);

/// Orientation of the device housing as the IMU sees it.
struct Attitude {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
  std::array<double, 3> rate{};  // rad/s about x, y, z
};

struct OrientationSample {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
  std::array<double, 3> angular_rate{};
  int64_t timestamp_us = 0;
};

inline constexpr double kTorqueSensorFullScale = 2.0;  // N·m

struct TorqueSensorSample {
  double torque = 0.0;
  int64_t timestamp_us = 0;
};

struct SensorConfig {
  int64_t imu_period_us = 5000;            // 200 Hz
  int64_t torque_sensor_period_us = 2000;  // 500 Hz
  double torque_noise_std = 0.002;         // 0.1% of 2 N·m full scale
  double imu_noise_std = 0.0;              // rad, angle channels
};

struct SensorReadout {
  std::optional<OrientationSample> orientation;
  std::optional<TorqueSensorSample> torque;
};

/// IMU and bench torque sensor, decimated from the simulation tick.
class SensorSuite {
 public:
  SensorSuite(const SensorConfig& config, uint64_t seed);

  /// Emits a sample for each sensor whose cadence boundary falls on
  /// @p timestamp_us.
  SensorReadout Sample(const Attitude& attitude, double reaction_torque,
                       int64_t timestamp_us);

  const SensorConfig& config() const { return config_; }

 private:
  SensorConfig config_;
  RngStream torque_rng_;
  RngStream imu_rng_;
};

}  // namespace bihap
