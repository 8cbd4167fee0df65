#pragma once

/// @file
///
/// Host-side haptic rendering: the impedance law, vibration fallback, IMU
/// kinematics estimation and the error-adaptive feedback strategy.

#include <cstdint>
#include <deque>
#include <optional>

#include "bihap/bands.h"
#include "bihap/control.h"
#include "bihap/plant.h"

namespace bihap {

struct ImpedanceGains {
  double k_rot = 2.5;  // N·m/rad
  double b_rot = 1.0;  // N·m·s/rad
  double m_rot = 0.0;  // N·m·s²/rad

  void Validate() const;
};

struct Kinematics {
  double theta = 0.0;       // rad, [-pi, pi)
  double theta_dot = 0.0;   // rad/s
  double theta_ddot = 0.0;  // rad/s²
};

/// Spring-damper-mass torque pulling @p actual toward @p desired. The
/// position error is taken the short way around the circle.
/// Throws std::invalid_argument on non-finite input.
double ImpedanceTorque(const Kinematics& desired, const Kinematics& actual,
                       const ImpedanceGains& gains);

/// alpha·sin(omega·t).
double VibrationSignal(double alpha, double omega, double t);

enum class Axis : uint8_t { kRoll, kPitch, kYaw };

struct KinematicsEstimate {
  Kinematics kinematics;
  /// True when fewer than three samples were available; theta_ddot is 0.
  bool degraded = false;
};

/// Angle, rate and acceleration about one axis from recent IMU samples.
class KinematicsEstimator {
 public:
  static constexpr std::size_t kWindow = 5;
  static constexpr std::size_t kMinSamples = 3;

  explicit KinematicsEstimator(Axis axis = Axis::kYaw) : axis_(axis) {}

  void Push(const OrientationSample& sample);
  KinematicsEstimate Estimate() const;
  std::size_t size() const { return samples_.size(); }
  void Clear() { samples_.clear(); }

 private:
  double Angle(const OrientationSample& s) const;
  double Rate(const OrientationSample& s) const;

  Axis axis_;
  std::deque<OrientationSample> samples_;
};

/// Free-function form over an explicit sample window (oldest first).
KinematicsEstimate EstimateKinematics(const std::deque<OrientationSample>& samples,
                                      Axis axis);

enum class Scenario : uint8_t {
  kTargetReached = 0,
  kOvershot = 1,
  kNormal = 2,
  kFarFromTarget = 3,
  kFailure = 4,
};

const char* ToString(Scenario scenario);

struct FeedbackState {
  Scenario scenario = Scenario::kFarFromTarget;
  /// Seconds accumulated in the far zone while not approaching the target.
  double dwell_timer = 0.0;
  /// Set once the target band has been entered (cleared by ResetHistory).
  bool crossed_target = false;
  /// Sign of the error on the side the band was last entered from.
  int approach_sign = 0;
  /// Sign of the error on the most recent tick outside the band.
  int last_outside_sign = 0;
};

/// Clears target-crossing history, e.g. after the target moves.
FeedbackState ResetHistory(const FeedbackState& state);

struct ClassifyConfig {
  double reached_deg = bands::kReachedDeg;
  double warn_deg = bands::kWarnDeg;
  double far_dwell_s = bands::kFarDwellS;

  void Validate() const;
};

/// One step of the scenario state machine.
///
/// @p error_deg is the signed wrapped error (desired - actual) in degrees.
/// @p velocity_sign is the sign of d|error|/dt: +1 moving away from the
/// target, -1 approaching, 0 still.
FeedbackState Classify(double error_deg, const FeedbackState& state,
                       int velocity_sign, bool object_ok, double dt,
                       const ClassifyConfig& config = {});

/// True when the far-zone torque gate is open.
bool FarTorqueGateOpen(const FeedbackState& state, const ClassifyConfig& config = {});

enum class AudioCue : uint8_t { kNone = 0, kDing = 1, kAlarm = 2 };
enum class Zone : uint8_t { kWhite = 0, kBlue = 1, kGreen = 2, kFail = 3 };

const char* ToString(AudioCue cue);
const char* ToString(Zone zone);

/// Display zone for an error; shares thresholds with Classify.
Zone ZoneOf(double error_deg, bool object_ok, double reached_deg = bands::kReachedDeg,
            double warn_deg = bands::kWarnDeg);

struct Vibration {
  double amplitude = 0.0;          // N·m
  double angular_frequency = 0.0;  // rad/s
};

struct FeedbackCommand {
  double torque = 0.0;
  std::optional<Vibration> vibration;
  AudioCue audio_cue = AudioCue::kNone;
  Zone visual_zone = Zone::kGreen;
};

struct StrategyConfig {
  ImpedanceGains gains;
  ClassifyConfig classify;
  double vibration_frequency_hz = 40.0;
  double vibration_amplitude_max = 0.03;  // N·m
  /// Vibration amplitude per N·m of replaced torque when saturated.
  double saturation_vibration_gain = 1.0;
  /// Ablation switch: false suppresses torque (and its saturation
  /// vibration substitute) while keeping visual and audio cues.
  bool torque_feedback = true;
  /// |d|error|/dt| below this counts as still, rad/s.
  double velocity_deadband = 1e-6;

  void Validate() const;
};

struct StrategyInput {
  Kinematics desired;
  Kinematics actual;
  bool object_ok = true;
  OutputMode saturation_mode = OutputMode::kTorque;
  double t = 0.0;
  double dt = 0.0;
};

struct StrategyOutput {
  FeedbackState state;
  FeedbackCommand command;
  double error_deg = 0.0;
  /// Impedance torque before scenario gating.
  double impedance_torque = 0.0;
};

/// Pure strategy step.
StrategyOutput StrategyStep(const FeedbackState& state, const StrategyInput& input,
                            const StrategyConfig& config);

/// Stateful wrapper advanced by the host loop.
class FeedbackStrategy {
 public:
  explicit FeedbackStrategy(const StrategyConfig& config = {});

  const StrategyOutput& Step(const StrategyInput& input);
  void ResetHistory();

  const FeedbackState& state() const { return last_.state; }
  const StrategyOutput& last() const { return last_; }
  const StrategyConfig& config() const { return config_; }

 private:
  StrategyConfig config_;
  StrategyOutput last_;
};

}  // namespace bihap
