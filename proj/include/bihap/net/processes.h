#pragma once

/// @file
///
/// The device and host halves of the bench, each a real-time loop talking
/// over UDP. Clocks are the shared monotonic clock, so telemetry timestamps
/// from the device line up with the host's goal signal.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bihap/device.h"
#include "bihap/harness/offline.h"
#include "bihap/plant.h"
#include "bihap/protocol.h"

namespace bihap::net {

struct DeviceProcessConfig {
  DeviceConfig device;
  SensorConfig sensors;
  std::string bind_address = "127.0.0.1";
  uint16_t listen_port = protocol::kDefaultDevicePort;
  std::string host_address = "127.0.0.1";
  uint16_t host_port = protocol::kDefaultHostPort;
  double telemetry_rate_hz = 100.0;  // flywheel telemetry
  double duration = 0.0;             // s, 0 runs until stopped
  uint64_t seed = 1;

  void Validate() const;
};

struct DeviceProcessStats {
  int64_t ticks = 0;
  uint64_t received = 0;
  uint64_t sent = 0;
  uint64_t stale = 0;
  uint64_t decode_errors = 0;
  /// Ticks run late by more than one period.
  int64_t overruns = 0;
};

inline constexpr const char* kDeviceTickCsvHeader =
    "wall_s,sim_s,host_silence_s,desired_torque_Nm,reaction_torque_Nm,flywheel_omega_rad_s,"
    "mode,heartbeat_lost";
inline constexpr const char* kTrafficCsvHeader =
    "wall_s,direction,kind,sequence,timestamp_us,fields";

/// Runs the 1 kHz device loop until @p stop is set or the duration ends.
/// Writes device_ticks.csv and device_traffic.csv into @p out_dir.
DeviceProcessStats RunDeviceProcess(const DeviceProcessConfig& config,
                                    const std::atomic<bool>& stop,
                                    const std::filesystem::path& out_dir);

struct HostProcessConfig {
  harness::GoalKind goal = harness::GoalKind::kSinusoid;
  double alpha = 0.015;     // N·m
  double omega = 8.0;       // rad/s
  double amplitude = 0.01;  // N·m
  double duration = 10.0;   // s
  double command_rate_hz = 50.0;
  double heartbeat_rate_hz = 10.0;
  double telemetry_rate_hz = 100.0;  // expected flywheel telemetry rate
  double cutoff_hz = 5.0;
  int filter_order = 4;
  double peer_timeout_s = 1.0;
  std::string bind_address = "127.0.0.1";
  uint16_t listen_port = protocol::kDefaultHostPort;
  std::string device_address = "127.0.0.1";
  uint16_t device_port = protocol::kDefaultDevicePort;
  uint64_t seed = 1;

  void Validate() const;
  double GoalAt(double t) const;
};

struct HostTelemetryRow {
  double time_s = 0.0;  // device sample time relative to the goal start
  double desired = 0.0;
  double reaction = 0.0;
  double omega = 0.0;
  int mode = 0;
};

struct HostResult {
  harness::MetricsReport report;
  std::vector<HostTelemetryRow> telemetry;
  uint64_t sent = 0;
  uint64_t received = 0;
  bool peer_lost = false;
};

inline constexpr const char* kHostTelemetryCsvHeader =
    "time_s,desired_torque_Nm,reaction_torque_Nm,flywheel_omega_rad_s,mode";

/// Streams the goal for the configured duration, collects flywheel
/// telemetry, and scores the device's reaction torque against the goal.
/// Writes host_traffic.csv into @p out_dir.
HostResult RunHostProcess(const HostProcessConfig& config, const std::atomic<bool>& stop,
                          const std::filesystem::path& out_dir);

/// Resamples telemetry onto its nominal grid (linear fill across gaps) and
/// computes tracking metrics.
harness::MetricsReport ScoreHostTelemetry(const HostProcessConfig& config,
                                          const std::vector<HostTelemetryRow>& rows);

/// "wall_s,direction,kind,sequence,timestamp_us,f0;f1;..." for traffic logs.
std::string TrafficLine(double wall_s, const char* direction, const protocol::Message& message);

}  // namespace bihap::net
