#pragma once

/// @file
///
/// JSON form of every configuration struct. Reading is strict: unknown keys
/// and type mismatches raise ConfigError naming the dotted field path.
/// Missing keys keep their defaults.

#include <string>

#include "json.hpp"

#include "bihap/config_error.h"
#include "bihap/device.h"
#include "bihap/feedback.h"
#include "bihap/harness/offline.h"
#include "bihap/net/gateway.h"
#include "bihap/net/processes.h"
#include "bihap/run_config.h"
#include "bihap/sim_link.h"
#include "bihap/teleop.h"

namespace bihap::config {

using Json = nlohmann::ordered_json;

/// Defined for MotorParams, PidGains, DeviceConfig, SensorConfig,
/// SimLinkConfig, ImpedanceGains, ClassifyConfig, StrategyConfig,
/// harness::OfflineConfig, teleop::{SurrogateParams, TargetParams,
/// GameConfig, OperatorParams, SessionConfig}, net::{DeviceProcessConfig,
/// HostProcessConfig, GatewayConfig, LiveLinkConfig} and PlayConfig.
template <typename T>
Json ToJson(const T& value);

template <typename T>
void FromJson(const Json& json, T& value, const std::string& path = "");

/// Parses JSON text, raising ConfigError on syntax errors.
Json ParseJson(const std::string& text, const std::string& source);

}  // namespace bihap::config
