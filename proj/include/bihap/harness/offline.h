#pragma once

/// @file
///
/// Bench experiment: the device follows a sinusoid or square torque goal
/// sent by a simulated host over a simulated link, while a simulated torque
/// sensor records the reaction torque.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bihap/config_error.h"
#include "bihap/device.h"
#include "bihap/harness/signal.h"
#include "bihap/plant.h"
#include "bihap/sim_link.h"

namespace bihap::harness {

enum class GoalKind : uint8_t { kSinusoid, kSquare };

const char* ToString(GoalKind kind);
GoalKind ParseGoalKind(const std::string& text);

using bihap::ConfigError;

struct OfflineConfig {
  GoalKind goal = GoalKind::kSinusoid;
  double alpha = 0.015;     // N·m, sinusoid
  double omega = 8.0;       // rad/s, sinusoid
  double amplitude = 0.01;  // N·m, square
  double duration = 10.0;   // s
  uint64_t seed = 1;

  double command_rate_hz = 50.0;    // host goal updates
  double telemetry_rate_hz = 100.0; // device -> host flywheel telemetry
  double cutoff_hz = 5.0;
  int filter_order = 4;

  DeviceConfig device;
  SensorConfig sensors;
  SimLinkConfig downlink;
  SimLinkConfig uplink;

  /// Throws ConfigError naming every invalid field.
  void Validate() const;
  double GoalAt(double t) const;
};

/// Fields that do not apply to the experiment type stay empty.
struct MetricsReport {
  std::optional<double> rmse;
  std::optional<double> rmse_raw;
  std::optional<double> latency;
  std::optional<double> overshoot_percent;
  std::optional<double> peak_time;
  std::optional<int64_t> fit_count;

  std::string goal;
  std::optional<double> alpha;
  std::optional<double> omega;
  std::optional<double> amplitude;
  double duration = 0.0;
  uint64_t seed = 0;
  /// Metrics that could not be computed, with the reason.
  std::map<std::string, std::string> notes;

  bool operator==(const MetricsReport&) const = default;
};

/// Flat "key=value" lines; absent fields are written as "key=absent".
std::string FormatReport(const MetricsReport& report);
MetricsReport ParseReport(const std::string& text);

struct OfflineRow {
  double time_s = 0.0;
  double desired = 0.0;
  double raw = 0.0;
  double filtered = 0.0;
  double omega = 0.0;
  OutputMode mode = OutputMode::kTorque;
};

struct OfflineResult {
  MetricsReport report;
  std::vector<OfflineRow> rows;
};

OfflineResult RunOffline(const OfflineConfig& config);

/// Sets goal, rmse and rmse_raw, plus latency (sinusoid) or overshoot and
/// peak time (square). Metrics that cannot be computed become notes.
void ScoreTracking(MetricsReport& report, GoalKind goal, double amplitude, const Signal& filtered,
                   const Signal& raw, const Signal& desired);

inline constexpr const char* kOfflineCsvHeader =
    "time_s,desired_torque_Nm,raw_torque_Nm,filtered_torque_Nm,flywheel_omega_rad_s,mode";

void WriteOfflineCsv(std::ostream& out, const std::vector<OfflineRow>& rows);

/// Shortest round-trip decimal form, used by every CSV and report writer.
std::string FormatNumber(double value);

}  // namespace bihap::harness
