#pragma once

/// @file
///
/// Telemanipulation game: a surrogate robot hand rotates an object toward
/// the operator's device orientation while the operator chases targets on a
/// zone dial. Feedback flows back through the device.

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bihap/device.h"
#include "bihap/feedback.h"
#include "bihap/plant.h"
#include "bihap/rng.h"
#include "bihap/sim_link.h"

namespace bihap::teleop {

// ---------------------------------------------------------------- surrogate

struct SurrogateParams {
  double natural_frequency = 20.0;  // rad/s
  double damping_ratio = 0.9;
  double disturbance_std = 0.002;   // rad, equivalent command offset
  double failure_rate = 0.01;       // events/s
  double stuck_duration = 2.0;      // s

  void Validate() const;
};

enum class FailureKind : uint8_t { kNone, kStuck, kFallen };

const char* ToString(FailureKind kind);

struct ObjectState {
  double angle = 0.0;     // rad, unbounded
  double velocity = 0.0;  // rad/s
  bool ok = true;
  FailureKind failure = FailureKind::kNone;
  double failure_remaining = 0.0;  // s
};

/// One semi-implicit step of the tracker. @p disturbance draws the
/// disturbance, @p failures the Poisson failure process; both streams are
/// advanced by a fixed number of draws per call.
ObjectState SurrogateStep(const ObjectState& state, double commanded, const SurrogateParams& params,
                          double dt, RngStream& disturbance, RngStream& failures);

class Surrogate {
 public:
  Surrogate(const SurrogateParams& params, uint64_t seed);

  const ObjectState& Step(double commanded, double dt);
  const ObjectState& state() const { return state_; }
  void Reset(const ObjectState& state) { state_ = state; }

 private:
  SurrogateParams params_;
  RngStream disturbance_;
  RngStream failures_;
  ObjectState state_;
};

// -------------------------------------------------------------------- game

enum class GameMode : uint8_t { kDiscrete, kContinuous };
enum class ScoringRule : uint8_t {
  /// S_i = 1 only once the in-band dwell has reached hold_time.
  kPostHold,
  /// S_i = 1 on every in-band refresh.
  kEveryInBand,
};

const char* ToString(GameMode mode);
const char* ToString(ScoringRule rule);
GameMode ParseGameMode(const std::string& text);
ScoringRule ParseScoringRule(const std::string& text);

struct TargetParams {
  double range_deg = 90.0;
  double dwell_min_s = 4.0;
  double dwell_max_s = 8.0;
  double cutoff_hz = 0.2;
  /// Bound on the continuous target's rate; the filtered walk stays below it.
  double rate_max_deg_s = 6.0;
  /// Each uniform rate draw is held this long before the low-pass.
  double rate_hold_s = 1.0;

  void Validate() const;
};

struct GameConfig {
  GameMode mode = GameMode::kDiscrete;
  double reached_band = bands::kReachedDeg;  // deg
  double warn_band = bands::kWarnDeg;        // deg
  double hold_time = bands::kHoldS;          // s
  double refresh_rate = 10.0;                // Hz
  double host_rate = 50.0;                   // Hz
  double session_duration = 120.0;           // s
  ScoringRule scoring = ScoringRule::kPostHold;
  TargetParams targets;

  void Validate() const;
};

Zone ZoneOf(double error_deg, bool object_ok, const GameConfig& config);

struct ScoreState {
  double dwell = 0.0;  // s in band since entry
  bool in_band = false;
  int score = 0;       // S_i of the latest refresh
  int64_t fit_count = 0;
};

/// Advances scoring by one refresh of length @p dt.
ScoreState FitCountStep(const ScoreState& state, double error_deg, bool object_ok, double dt,
                        const GameConfig& config);

struct TargetSegment {
  double start = 0.0;  // s
  double end = 0.0;    // s
  double angle = 0.0;  // rad
};

/// Target angle sampled at a fixed rate; the value at t is the latest
/// sample at or before t.
class TargetTrajectory {
 public:
  TargetTrajectory() = default;
  TargetTrajectory(std::vector<double> samples, double sample_rate, bool piecewise_constant,
                   std::vector<TargetSegment> segments = {});

  double At(double t) const;
  /// Finite-difference rate; 0 for piecewise-constant trajectories.
  double RateAt(double t) const;
  bool piecewise_constant() const { return piecewise_constant_; }
  double sample_rate() const { return sample_rate_; }
  const std::vector<double>& samples() const { return samples_; }
  const std::vector<TargetSegment>& segments() const { return segments_; }

 private:
  std::size_t IndexAt(double t) const;

  std::vector<double> samples_;
  double sample_rate_ = 1.0;
  bool piecewise_constant_ = true;
  std::vector<TargetSegment> segments_;
};

/// Discrete targets jump on refresh boundaries; continuous targets are a
/// low-pass filtered rate walk reflected at +-range_deg.
TargetTrajectory GenerateTargets(const GameConfig& config, uint64_t seed);

// ---------------------------------------------------------------- operator

struct OperatorObservation {
  double t = 0.0;
  double error = 0.0;         // rad, wrapped target - object
  double target = 0.0;        // rad
  double object = 0.0;        // rad
  double device_angle = 0.0;  // rad
  bool object_ok = true;
};

struct OperatorInput {
  double rate = 0.0;                 // rad/s
  std::optional<double> angle;       // absolute device angle, overrides rate
  bool frozen = false;               // live input stale
  bool disconnected = false;         // abort the session
};

class OperatorSource {
 public:
  virtual ~OperatorSource() = default;
  virtual OperatorInput Step(const OperatorObservation& observation,
                             const FeedbackCommand& feedback, double dt) = 0;
};

struct OperatorParams {
  double reaction_delay = 0.4;   // s
  double gain = 1.5;             // 1/s
  double noise_std = 0.005;      // rad, added to the perceived error
  bool uses_torque_cue = true;
  double cue_delay_factor = 0.5;

  void Validate() const;
};

/// True when the command renders torque, directly or as its saturation
/// vibration substitute.
bool HasHapticCue(const FeedbackCommand& command);

/// gain * (delayed_error + noise).
double OperatorRate(const OperatorParams& params, double delayed_error, double noise);

/// Proportional operator acting on a delayed view of the error.
class ScriptedOperator : public OperatorSource {
 public:
  ScriptedOperator(const OperatorParams& params, uint64_t seed);

  OperatorInput Step(const OperatorObservation& observation, const FeedbackCommand& feedback,
                     double dt) override;
  /// Delay used on the latest step.
  double effective_delay() const { return effective_delay_; }

 private:
  OperatorParams params_;
  RngStream rng_;
  std::deque<std::pair<double, double>> history_;  // (t, error)
  double effective_delay_ = 0.0;
  double seen_at_ = -1e300;
};

/// Holds the device exactly on the target.
class PerfectOperator : public OperatorSource {
 public:
  OperatorInput Step(const OperatorObservation& observation, const FeedbackCommand&,
                     double) override {
    OperatorInput in;
    in.angle = observation.target;
    return in;
  }
};

// ----------------------------------------------------------------- session

struct SessionConfig {
  GameConfig game;
  SurrogateParams surrogate;
  StrategyConfig strategy;
  DeviceConfig device;
  SensorConfig sensors;
  SimLinkConfig downlink;
  SimLinkConfig uplink;
  uint64_t seed = 1;

  /// Throws ConfigError listing offending fields.
  void Validate() const;
};

struct SessionRow {
  double t = 0.0;
  double device_deg = 0.0;
  double object_deg = 0.0;
  double target_deg = 0.0;
  double error_deg = 0.0;
  Zone zone = Zone::kGreen;
  Scenario scenario = Scenario::kFarFromTarget;
  int score = 0;
  int64_t fit_count = 0;
  double torque = 0.0;         // commanded, N·m
  double vibration = 0.0;      // commanded amplitude, N·m
  AudioCue audio = AudioCue::kNone;
  bool object_ok = true;
  bool input_frozen = false;
  OutputMode device_mode = OutputMode::kTorque;
};

struct SessionLog {
  std::vector<SessionRow> rows;
  int64_t fit_count = 0;
  bool aborted = false;
  std::string abort_reason;
  uint64_t seed = 0;
  /// Host ticks on which the operator received a haptic cue.
  int64_t cue_ticks = 0;
};

using RefreshCallback = std::function<void(const SessionRow&)>;

SessionLog RunSession(const SessionConfig& config, OperatorSource& source,
                      const RefreshCallback& on_refresh = {});

inline constexpr const char* kSessionCsvHeader =
    "time_s,device_angle_deg,object_angle_deg,target_angle_deg,error_deg,zone,scenario,"
    "s_i,fit_count,torque_Nm,vibration_Nm,audio,object_ok,input_frozen,device_mode";

void WriteSessionCsv(std::ostream& out, const SessionLog& log);

}  // namespace bihap::teleop
