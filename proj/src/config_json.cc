#include "bihap/config_json.h"

#include <limits>
#include <set>
#include <type_traits>

#include <fmt/format.h>

namespace bihap::config {

namespace {

template <typename V> void Fields(V& v, MotorParams& m) {
  v("torque_constant", m.torque_constant);
  v("winding_resistance", m.winding_resistance);
  v("back_emf_constant", m.back_emf_constant);
  v("max_voltage", m.max_voltage);
  v("viscous_friction", m.viscous_friction);
  v("flywheel_inertia", m.flywheel_inertia);
}

template <typename V> void Fields(V& v, PidGains& g) {
  v("kp", g.kp);
  v("ki", g.ki);
  v("kd", g.kd);
}

template <typename V> void Fields(V& v, DeviceConfig& d) {
  v("motor", d.motor);
  v("pid", d.pid);
  v("output_limit", d.output_limit);
  v("omega_max", d.omega_max);
  v("omega_resume", d.omega_resume);
  v("tick_us", d.tick_us);
  v("setpoint_limit", d.setpoint_limit);
  v("spin_down_torque", d.spin_down_torque);
  v("vibration_amplitude_max", d.vibration_amplitude_max);
  v("vibration_frequency_hz", d.vibration_frequency_hz);
  v("command_hold_s", d.command_hold_s);
  v("command_ramp_s", d.command_ramp_s);
  v("heartbeat_timeout_s", d.heartbeat_timeout_s);
}

template <typename V> void Fields(V& v, SensorConfig& s) {
  v("imu_period_us", s.imu_period_us);
  v("torque_sensor_period_us", s.torque_sensor_period_us);
  v("torque_noise_std", s.torque_noise_std);
  v("imu_noise_std", s.imu_noise_std);
}

template <typename V> void Fields(V& v, SimLinkConfig& l) {
  v("base_latency", l.base_latency);
  v("jitter_std", l.jitter_std);
  v("loss_probability", l.loss_probability);
}

template <typename V> void Fields(V& v, ImpedanceGains& g) {
  v("k_rot", g.k_rot);
  v("b_rot", g.b_rot);
  v("m_rot", g.m_rot);
}

template <typename V> void Fields(V& v, ClassifyConfig& c) {
  v("reached_deg", c.reached_deg);
  v("warn_deg", c.warn_deg);
  v("far_dwell_s", c.far_dwell_s);
}

template <typename V> void Fields(V& v, StrategyConfig& s) {
  v("gains", s.gains);
  v("classify", s.classify);
  v("vibration_frequency_hz", s.vibration_frequency_hz);
  v("vibration_amplitude_max", s.vibration_amplitude_max);
  v("saturation_vibration_gain", s.saturation_vibration_gain);
  v("torque_feedback", s.torque_feedback);
  v("velocity_deadband", s.velocity_deadband);
}

template <typename V> void Fields(V& v, harness::OfflineConfig& c) {
  v("goal", c.goal);
  v("alpha", c.alpha);
  v("omega", c.omega);
  v("amplitude", c.amplitude);
  v("duration", c.duration);
  v("seed", c.seed);
  v("command_rate_hz", c.command_rate_hz);
  v("telemetry_rate_hz", c.telemetry_rate_hz);
  v("cutoff_hz", c.cutoff_hz);
  v("filter_order", c.filter_order);
  v("device", c.device);
  v("sensors", c.sensors);
  v("downlink", c.downlink);
  v("uplink", c.uplink);
}

template <typename V> void Fields(V& v, teleop::SurrogateParams& s) {
  v("natural_frequency", s.natural_frequency);
  v("damping_ratio", s.damping_ratio);
  v("disturbance_std", s.disturbance_std);
  v("failure_rate", s.failure_rate);
  v("stuck_duration", s.stuck_duration);
}

template <typename V> void Fields(V& v, teleop::TargetParams& t) {
  v("range_deg", t.range_deg);
  v("dwell_min_s", t.dwell_min_s);
  v("dwell_max_s", t.dwell_max_s);
  v("cutoff_hz", t.cutoff_hz);
  v("rate_max_deg_s", t.rate_max_deg_s);
  v("rate_hold_s", t.rate_hold_s);
}

template <typename V> void Fields(V& v, teleop::GameConfig& g) {
  v("mode", g.mode);
  v("reached_band", g.reached_band);
  v("warn_band", g.warn_band);
  v("hold_time", g.hold_time);
  v("refresh_rate", g.refresh_rate);
  v("host_rate", g.host_rate);
  v("session_duration", g.session_duration);
  v("scoring", g.scoring);
  v("targets", g.targets);
}

template <typename V> void Fields(V& v, teleop::OperatorParams& o) {
  v("reaction_delay", o.reaction_delay);
  v("gain", o.gain);
  v("noise_std", o.noise_std);
  v("uses_torque_cue", o.uses_torque_cue);
  v("cue_delay_factor", o.cue_delay_factor);
}

template <typename V> void Fields(V& v, teleop::SessionConfig& s) {
  v("game", s.game);
  v("surrogate", s.surrogate);
  v("strategy", s.strategy);
  v("device", s.device);
  v("sensors", s.sensors);
  v("downlink", s.downlink);
  v("uplink", s.uplink);
  v("seed", s.seed);
}

template <typename V> void Fields(V& v, net::DeviceProcessConfig& c) {
  v("device", c.device);
  v("sensors", c.sensors);
  v("bind_address", c.bind_address);
  v("listen_port", c.listen_port);
  v("host_address", c.host_address);
  v("host_port", c.host_port);
  v("telemetry_rate_hz", c.telemetry_rate_hz);
  v("duration", c.duration);
  v("seed", c.seed);
}

template <typename V> void Fields(V& v, net::HostProcessConfig& c) {
  v("goal", c.goal);
  v("alpha", c.alpha);
  v("omega", c.omega);
  v("amplitude", c.amplitude);
  v("duration", c.duration);
  v("command_rate_hz", c.command_rate_hz);
  v("heartbeat_rate_hz", c.heartbeat_rate_hz);
  v("telemetry_rate_hz", c.telemetry_rate_hz);
  v("cutoff_hz", c.cutoff_hz);
  v("filter_order", c.filter_order);
  v("peer_timeout_s", c.peer_timeout_s);
  v("bind_address", c.bind_address);
  v("listen_port", c.listen_port);
  v("device_address", c.device_address);
  v("device_port", c.device_port);
  v("seed", c.seed);
}

template <typename V> void Fields(V& v, net::GatewayConfig& c) {
  v("bind_address", c.bind_address);
  v("ws_port", c.ws_port);
  v("ws_path", c.ws_path);
  v("udp_port", c.udp_port);
  v("buffer_seconds", c.buffer_seconds);
  v("duration", c.duration);
}

template <typename V> void Fields(V& v, net::LiveLinkConfig& c) {
  v("gateway_address", c.gateway_address);
  v("gateway_port", c.gateway_port);
  v("connect_timeout_s", c.connect_timeout_s);
  v("heartbeat_period_s", c.heartbeat_period_s);
  v("input_stale_s", c.input_stale_s);
  v("gateway_timeout_s", c.gateway_timeout_s);
}

template <typename V> void Fields(V& v, PlayConfig& c) {
  v("session", c.session);
  v("operator", c.operator_kind);
  v("scripted", c.scripted);
  v("live", c.live);
}

// Enums travel as their lowercase names.
std::string EnumName(harness::GoalKind k) { return harness::ToString(k); }
std::string EnumName(teleop::GameMode m) { return teleop::ToString(m); }
std::string EnumName(teleop::ScoringRule r) { return teleop::ToString(r); }
std::string EnumName(OperatorKind k) { return ToString(k); }
void EnumParse(const std::string& s, OperatorKind& k) { k = ParseOperatorKind(s); }
void EnumParse(const std::string& s, harness::GoalKind& k) { k = harness::ParseGoalKind(s); }
void EnumParse(const std::string& s, teleop::GameMode& m) { m = teleop::ParseGameMode(s); }
void EnumParse(const std::string& s, teleop::ScoringRule& r) { r = teleop::ParseScoringRule(s); }

template <typename T>
Json Write(const T& value);

struct Writer {
  Json& out;
  template <typename T>
  void operator()(const char* key, const T& value) { out[key] = Write(value); }
};

template <typename T>
Json Write(const T& value) {
  if constexpr (std::is_same_v<T, bool> || std::is_arithmetic_v<T> ||
                std::is_same_v<T, std::string>) {
    return Json(value);
  } else if constexpr (std::is_enum_v<T>) {
    return Json(EnumName(value));
  } else {
    Json out = Json::object();
    Writer w{out};
    Fields(w, const_cast<T&>(value));
    return out;
  }
}

[[noreturn]] void Fail(const std::string& path, const std::string& why) {
  throw ConfigError({path}, fmt::format("config field '{}': {}", path, why));
}

std::string Join(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

template <typename T>
void Read(const Json& json, T& value, const std::string& path);

struct Reader {
  const Json& in;
  const std::string& path;
  std::set<std::string> known;
  template <typename T>
  void operator()(const char* key, T& value) {
    known.insert(key);
    auto it = in.find(key);
    if (it != in.end()) { Read(*it, value, Join(path, key)); }
  }
};

template <typename T>
void Read(const Json& json, T& value, const std::string& path) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!json.is_boolean()) { Fail(path, "expected a boolean"); }
    value = json.get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!json.is_string()) { Fail(path, "expected a string"); }
    value = json.get<std::string>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!json.is_number_integer()) { Fail(path, "expected an integer"); }
    if (json.get<long double>() < static_cast<long double>(std::numeric_limits<T>::min()) ||
        json.get<long double>() > static_cast<long double>(std::numeric_limits<T>::max())) {
      Fail(path, "integer out of range");
    }
    if constexpr (std::is_unsigned_v<T>) {
      if (json.is_number_unsigned()) {
        value = json.get<T>();
      } else {
        if (json.get<int64_t>() < 0) { Fail(path, "expected a non-negative integer"); }
        value = static_cast<T>(json.get<int64_t>());
      }
    } else {
      value = json.get<T>();
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!json.is_number()) { Fail(path, "expected a number"); }
    value = json.get<T>();
  } else if constexpr (std::is_enum_v<T>) {
    if (!json.is_string()) { Fail(path, "expected a string"); }
    try {
      EnumParse(json.get<std::string>(), value);
    } catch (const std::invalid_argument& e) {
      Fail(path, e.what());
    }
  } else {
    if (!json.is_object()) { Fail(path, "expected an object"); }
    Reader r{json, path, {}};
    Fields(r, value);
    for (auto it = json.begin(); it != json.end(); ++it) {
      if (!r.known.count(it.key())) {
        const std::string where = path.empty() ? it.key() : path + "." + it.key();
        throw ConfigError({where}, fmt::format("unknown config key '{}'", where));
      }
    }
  }
}

}  // namespace

template <typename T>
Json ToJson(const T& value) {
  return Write(value);
}

template <typename T>
void FromJson(const Json& json, T& value, const std::string& path) {
  Read(json, value, path);
}

Json ParseJson(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError({source}, fmt::format("{}: invalid JSON: {}", source, e.what()));
  }
}

#define BIHAP_CONFIG_TYPE(T)                  \
  template Json ToJson<T>(const T&);          \
  template void FromJson<T>(const Json&, T&, const std::string&);

BIHAP_CONFIG_TYPE(MotorParams)
BIHAP_CONFIG_TYPE(PidGains)
BIHAP_CONFIG_TYPE(DeviceConfig)
BIHAP_CONFIG_TYPE(SensorConfig)
BIHAP_CONFIG_TYPE(SimLinkConfig)
BIHAP_CONFIG_TYPE(ImpedanceGains)
BIHAP_CONFIG_TYPE(ClassifyConfig)
BIHAP_CONFIG_TYPE(StrategyConfig)
BIHAP_CONFIG_TYPE(harness::OfflineConfig)
BIHAP_CONFIG_TYPE(teleop::SurrogateParams)
BIHAP_CONFIG_TYPE(teleop::TargetParams)
BIHAP_CONFIG_TYPE(teleop::GameConfig)
BIHAP_CONFIG_TYPE(teleop::OperatorParams)
BIHAP_CONFIG_TYPE(teleop::SessionConfig)
BIHAP_CONFIG_TYPE(net::DeviceProcessConfig)
BIHAP_CONFIG_TYPE(net::HostProcessConfig)
BIHAP_CONFIG_TYPE(net::GatewayConfig)
BIHAP_CONFIG_TYPE(net::LiveLinkConfig)
BIHAP_CONFIG_TYPE(PlayConfig)

#undef BIHAP_CONFIG_TYPE

}  // namespace bihap::config
