#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "bihap/config_json.h"
#include "bihap/harness/offline.h"
#include "bihap/net/gateway.h"
#include "bihap/net/live_operator.h"
#include "bihap/net/processes.h"
#include "bihap/net/udp.h"
#include "bihap/run_config.h"
#include "bihap/teleop.h"

namespace fs = std::filesystem;
using namespace bihap;
using config::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::atomic<bool> g_stop{false};

extern "C" void OnSignal(int) { g_stop.store(true); }

/// Bad flag combinations detected after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::string out;
  uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

void AddCommon(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config file (unknown keys are rejected)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "Output directory (default: $BIHAP_LOG_DIR or ./bihap_out)");
  c.seed_opt = cmd->add_option("--seed", c.seed, "Random seed");
}

fs::path OutputDir(const Common& c) {
  if (!c.out.empty()) { return c.out; }
  if (const char* env = std::getenv("BIHAP_LOG_DIR"); env && *env) { return env; }
  return "bihap_out";
}

template <typename T>
void LoadConfig(const Common& c, T& value) {
  if (c.config_path.empty()) { return; }
  std::ifstream in(c.config_path);
  std::stringstream text;
  text << in.rdbuf();
  config::FromJson(config::ParseJson(text.str(), c.config_path), value);
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) { throw std::runtime_error("cannot write " + path.string()); }
}

template <typename T>
void EchoConfig(const fs::path& path, const T& value) {
  WriteText(path, config::ToJson(value).dump(2) + "\n");
}

template <typename T>
void Override(CLI::Option* opt, T& field, const T& value) {
  if (opt && opt->count() > 0) { field = value; }
}

std::string Cell(const std::optional<double>& v, const char* fmt_spec) {
  return v ? fmt::format(fmt::runtime(fmt_spec), *v) : std::string("n/a");
}

// ------------------------------------------------------------------ offline

struct OfflineArgs {
  Common common;
  std::string suite;
  std::string goal;
  double alpha = 0.0;
  double omega = 0.0;
  double amplitude = 0.0;
  double duration = 0.0;
  CLI::Option* suite_opt = nullptr;
  CLI::Option* goal_opt = nullptr;
  CLI::Option* alpha_opt = nullptr;
  CLI::Option* omega_opt = nullptr;
  CLI::Option* amplitude_opt = nullptr;
  CLI::Option* duration_opt = nullptr;
};

std::string RunName(const harness::OfflineConfig& c) {
  if (c.goal == harness::GoalKind::kSinusoid) {
    return fmt::format("sinusoid_a{}_w{}", c.alpha, c.omega);
  }
  return fmt::format("square_A{}", c.amplitude);
}

int CmdOffline(const OfflineArgs& a) {
  if (a.suite.empty() && a.goal.empty() && a.common.config_path.empty()) {
    throw UsageError("offline: one of --suite, --goal or --config is required");
  }
  if (!a.suite.empty() && a.goal_opt->count() > 0) {
    throw UsageError("offline: --suite and --goal are mutually exclusive");
  }

  harness::OfflineConfig base;
  LoadConfig(a.common, base);
  if (!a.goal.empty()) { base.goal = harness::ParseGoalKind(a.goal); }
  Override(a.alpha_opt, base.alpha, a.alpha);
  Override(a.omega_opt, base.omega, a.omega);
  Override(a.amplitude_opt, base.amplitude, a.amplitude);
  Override(a.duration_opt, base.duration, a.duration);
  Override(a.common.seed_opt, base.seed, a.common.seed);

  std::vector<harness::OfflineConfig> runs;
  if (a.suite == "table1") {
    for (double alpha : {0.015, 0.030}) {
      for (double omega : {8.0, 16.0}) {
        harness::OfflineConfig c = base;
        c.goal = harness::GoalKind::kSinusoid;
        c.alpha = alpha;
        c.omega = omega;
        runs.push_back(c);
      }
    }
  } else if (a.suite == "table2") {
    for (double amplitude : {0.01, 0.02}) {
      harness::OfflineConfig c = base;
      c.goal = harness::GoalKind::kSquare;
      c.amplitude = amplitude;
      runs.push_back(c);
    }
  } else {
    runs.push_back(base);
  }
  for (const auto& c : runs) { c.Validate(); }

  const fs::path out = OutputDir(a.common);
  std::vector<std::pair<harness::OfflineConfig, harness::MetricsReport>> done;
  std::vector<double> seconds;
  for (const auto& c : runs) {
    const std::string name = RunName(c);
    EchoConfig(out / (name + ".config.json"), c);
    const auto t0 = std::chrono::steady_clock::now();
    const harness::OfflineResult r = harness::RunOffline(c);
    seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    std::ofstream csv(out / (name + ".csv"), std::ios::binary);
    harness::WriteOfflineCsv(csv, r.rows);
    if (!csv) { throw std::runtime_error("cannot write " + (out / (name + ".csv")).string()); }
    WriteText(out / (name + ".report"), harness::FormatReport(r.report));
    done.emplace_back(c, r.report);
  }

  bool any_sin = false;
  bool any_sq = false;
  for (const auto& [c, r] : done) {
    (c.goal == harness::GoalKind::kSinusoid ? any_sin : any_sq) = true;
  }
  if (any_sin) {
    std::cout << fmt::format("{:>10} {:>10} {:>12} {:>12} {:>9}\n", "alpha_Nm", "omega_rad_s",
                             "RMSE_Nm", "latency_s", "run_s");
    for (std::size_t i = 0; i < done.size(); ++i) {
      const auto& [c, r] = done[i];
      if (c.goal != harness::GoalKind::kSinusoid) { continue; }
      std::cout << fmt::format("{:>10} {:>10} {:>12} {:>12} {:>9.2f}\n", c.alpha, c.omega,
                               Cell(r.rmse, "{:.5f}"), Cell(r.latency, "{:.4f}"), seconds[i]);
    }
  }
  if (any_sq) {
    std::cout << fmt::format("{:>10} {:>12} {:>10} {:>9}\n", "A_Nm", "OS_percent", "t_p_s",
                             "run_s");
    for (std::size_t i = 0; i < done.size(); ++i) {
      const auto& [c, r] = done[i];
      if (c.goal != harness::GoalKind::kSquare) { continue; }
      std::cout << fmt::format("{:>10} {:>12} {:>10} {:>9.2f}\n", c.amplitude,
                               Cell(r.overshoot_percent, "{:.2f}"), Cell(r.peak_time, "{:.4f}"),
                               seconds[i]);
    }
  }
  for (const auto& [c, r] : done) {
    for (const auto& [key, note] : r.notes) {
      std::cerr << fmt::format("{}: {} unavailable ({})\n", RunName(c), key, note);
    }
  }
  return kExitOk;
}

// ------------------------------------------------------------ device / host

struct DeviceArgs {
  Common common;
  uint16_t port = 0;
  std::string host_addr;
  uint16_t host_port = 0;
  double duration = 0.0;
  CLI::Option* port_opt = nullptr;
  CLI::Option* host_addr_opt = nullptr;
  CLI::Option* host_port_opt = nullptr;
  CLI::Option* duration_opt = nullptr;
};

int CmdDevice(const DeviceArgs& a) {
  net::DeviceProcessConfig c;
  LoadConfig(a.common, c);
  Override(a.port_opt, c.listen_port, a.port);
  Override(a.host_addr_opt, c.host_address, a.host_addr);
  Override(a.host_port_opt, c.host_port, a.host_port);
  Override(a.duration_opt, c.duration, a.duration);
  Override(a.common.seed_opt, c.seed, a.common.seed);
  c.Validate();

  const fs::path out = OutputDir(a.common);
  EchoConfig(out / "device_config.json", c);
  std::cerr << fmt::format("device: listening on {}:{}, telemetry to {}:{}\n", c.bind_address,
                           c.listen_port, c.host_address, c.host_port);
  const net::DeviceProcessStats s = net::RunDeviceProcess(c, g_stop, out);
  std::cout << fmt::format(
      "device: ticks={} received={} sent={} stale={} decode_errors={} overruns={}\n", s.ticks,
      s.received, s.sent, s.stale, s.decode_errors, s.overruns);
  return kExitOk;
}

struct HostArgs {
  Common common;
  std::string goal;
  double alpha = 0.0;
  double omega = 0.0;
  double amplitude = 0.0;
  double duration = 0.0;
  uint16_t port = 0;
  std::string device_addr;
  uint16_t device_port = 0;
  CLI::Option* goal_opt = nullptr;
  CLI::Option* alpha_opt = nullptr;
  CLI::Option* omega_opt = nullptr;
  CLI::Option* amplitude_opt = nullptr;
  CLI::Option* duration_opt = nullptr;
  CLI::Option* port_opt = nullptr;
  CLI::Option* device_addr_opt = nullptr;
  CLI::Option* device_port_opt = nullptr;
};

int CmdHost(const HostArgs& a) {
  net::HostProcessConfig c;
  LoadConfig(a.common, c);
  if (a.goal_opt->count() > 0) { c.goal = harness::ParseGoalKind(a.goal); }
  Override(a.alpha_opt, c.alpha, a.alpha);
  Override(a.omega_opt, c.omega, a.omega);
  Override(a.amplitude_opt, c.amplitude, a.amplitude);
  Override(a.duration_opt, c.duration, a.duration);
  Override(a.port_opt, c.listen_port, a.port);
  Override(a.device_addr_opt, c.device_address, a.device_addr);
  Override(a.device_port_opt, c.device_port, a.device_port);
  Override(a.common.seed_opt, c.seed, a.common.seed);
  c.Validate();

  const fs::path out = OutputDir(a.common);
  EchoConfig(out / "host_config.json", c);
  const net::HostResult r = net::RunHostProcess(c, g_stop, out);

  std::ofstream csv(out / "host_telemetry.csv", std::ios::binary);
  csv << net::kHostTelemetryCsvHeader << '\n';
  for (const auto& row : r.telemetry) {
    csv << harness::FormatNumber(row.time_s) << ',' << harness::FormatNumber(row.desired) << ','
        << harness::FormatNumber(row.reaction) << ',' << harness::FormatNumber(row.omega) << ','
        << row.mode << '\n';
  }
  WriteText(out / "host.report", harness::FormatReport(r.report));
  std::cout << fmt::format("host: sent={} received={} telemetry={}\n", r.sent, r.received,
                           r.telemetry.size());
  std::cout << fmt::format("host: rmse={} latency={} overshoot_percent={} peak_time={}\n",
                           Cell(r.report.rmse, "{:.5f}"), Cell(r.report.latency, "{:.4f}"),
                           Cell(r.report.overshoot_percent, "{:.2f}"),
                           Cell(r.report.peak_time, "{:.4f}"));
  if (r.telemetry.empty()) {
    throw std::runtime_error("no telemetry received from the device");
  }
  return kExitOk;
}

// --------------------------------------------------------------------- play

struct PlayArgs {
  Common common;
  std::string mode;
  std::string scoring;
  std::string op;
  double duration = 0.0;
  bool no_torque = false;
  std::string gateway_addr;
  uint16_t gateway_port = 0;
  CLI::Option* mode_opt = nullptr;
  CLI::Option* scoring_opt = nullptr;
  CLI::Option* op_opt = nullptr;
  CLI::Option* duration_opt = nullptr;
  CLI::Option* gateway_addr_opt = nullptr;
  CLI::Option* gateway_port_opt = nullptr;
};

int CmdPlay(const PlayArgs& a) {
  PlayConfig c;
  LoadConfig(a.common, c);
  if (a.mode_opt->count() > 0) { c.session.game.mode = teleop::ParseGameMode(a.mode); }
  if (a.scoring_opt->count() > 0) { c.session.game.scoring = teleop::ParseScoringRule(a.scoring); }
  if (a.op_opt->count() > 0) { c.operator_kind = ParseOperatorKind(a.op); }
  Override(a.duration_opt, c.session.game.session_duration, a.duration);
  Override(a.gateway_addr_opt, c.live.gateway_address, a.gateway_addr);
  Override(a.gateway_port_opt, c.live.gateway_port, a.gateway_port);
  Override(a.common.seed_opt, c.session.seed, a.common.seed);
  if (a.no_torque) { c.session.strategy.torque_feedback = false; }
  c.Validate();

  const fs::path out = OutputDir(a.common);
  EchoConfig(out / "play_config.json", c);

  teleop::SessionLog log;
  if (c.operator_kind == OperatorKind::kLive) {
    net::LiveOperator live(c.live);
    log = teleop::RunSession(c.session, live,
                             [&live](const teleop::SessionRow& row) { live.Publish(row); });
  } else {
    teleop::ScriptedOperator scripted(c.scripted, c.session.seed);
    log = teleop::RunSession(c.session, scripted);
  }

  std::ofstream csv(out / "session.csv", std::ios::binary);
  teleop::WriteSessionCsv(csv, log);
  if (!csv) { throw std::runtime_error("cannot write session.csv"); }
  Json sidecar;
  sidecar["config"] = config::ToJson(c);
  sidecar["seed"] = log.seed;
  sidecar["fit_count"] = log.fit_count;
  sidecar["aborted"] = log.aborted;
  sidecar["abort_reason"] = log.abort_reason;
  sidecar["rows"] = log.rows.size();
  sidecar["cue_ticks"] = log.cue_ticks;
  WriteText(out / "session.json", sidecar.dump(2) + "\n");

  std::cout << fmt::format("fit_count={}\n", log.fit_count);
  if (log.aborted) { throw std::runtime_error("session aborted: " + log.abort_reason); }
  return kExitOk;
}

// ------------------------------------------------------------------ gateway

struct GatewayArgs {
  Common common;
  uint16_t ws_port = 0;
  uint16_t udp_port = 0;
  std::string path;
  double duration = 0.0;
  CLI::Option* ws_port_opt = nullptr;
  CLI::Option* udp_port_opt = nullptr;
  CLI::Option* path_opt = nullptr;
  CLI::Option* duration_opt = nullptr;
};

int CmdGateway(const GatewayArgs& a) {
  net::GatewayConfig c;
  LoadConfig(a.common, c);
  Override(a.ws_port_opt, c.ws_port, a.ws_port);
  Override(a.udp_port_opt, c.udp_port, a.udp_port);
  Override(a.path_opt, c.ws_path, a.path);
  Override(a.duration_opt, c.duration, a.duration);
  c.Validate();

  const fs::path out = OutputDir(a.common);
  EchoConfig(out / "gateway_config.json", c);
  std::cerr << fmt::format("gateway: ws://{}:{}{} udp {}:{}\n", c.bind_address, c.ws_port,
                           c.ws_path, c.bind_address, c.udp_port);
  const net::GatewayStats s = net::RunGateway(c, g_stop);
  Json stats;
  stats["frames_sent"] = s.frames_sent;
  stats["inputs_forwarded"] = s.inputs_forwarded;
  stats["malformed"] = s.malformed;
  stats["dropped"] = s.dropped;
  stats["rejected"] = s.rejected;
  WriteText(out / "gateway_stats.json", stats.dump(2) + "\n");
  std::cout << "gateway: " << stats.dump() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Momentum-wheel haptic device simulator and experiment runner", "bihap"};
  app.require_subcommand(1);

  OfflineArgs off;
  auto* offline = app.add_subcommand("offline", "Bench tracking experiments");
  AddCommon(offline, off.common);
  off.suite_opt = offline->add_option("--suite", off.suite, "Run a grid: table1 (sinusoids) or table2 (squares)")
                      ->check(CLI::IsMember({"table1", "table2"}));
  off.goal_opt = offline->add_option("--goal", off.goal, "sinusoid or square");
  off.alpha_opt = offline->add_option("--alpha", off.alpha, "Sinusoid amplitude, N·m");
  off.omega_opt = offline->add_option("--omega", off.omega, "Sinusoid frequency, rad/s");
  off.amplitude_opt = offline->add_option("--amplitude", off.amplitude, "Square amplitude, N·m");
  off.duration_opt = offline->add_option("--duration", off.duration, "Seconds");

  DeviceArgs dev;
  auto* device = app.add_subcommand("device", "Device process: 1 kHz control loop over UDP");
  AddCommon(device, dev.common);
  dev.port_opt = device->add_option("--port", dev.port, "UDP listen port (default 47800)");
  dev.host_addr_opt = device->add_option("--host-addr", dev.host_addr, "Host address");
  dev.host_port_opt = device->add_option("--host-port", dev.host_port, "Host UDP port (default 47801)");
  dev.duration_opt = device->add_option("--duration", dev.duration, "Seconds, 0 runs until signalled");

  HostArgs hst;
  auto* host = app.add_subcommand("host", "Host process: streams a goal torque and scores telemetry");
  AddCommon(host, hst.common);
  hst.goal_opt = host->add_option("--goal", hst.goal, "sinusoid or square");
  hst.alpha_opt = host->add_option("--alpha", hst.alpha, "Sinusoid amplitude, N·m");
  hst.omega_opt = host->add_option("--omega", hst.omega, "Sinusoid frequency, rad/s");
  hst.amplitude_opt = host->add_option("--amplitude", hst.amplitude, "Square amplitude, N·m");
  hst.duration_opt = host->add_option("--duration", hst.duration, "Seconds");
  hst.port_opt = host->add_option("--port", hst.port, "UDP listen port (default 47801)");
  hst.device_addr_opt = host->add_option("--device-addr", hst.device_addr, "Device address");
  hst.device_port_opt = host->add_option("--device-port", hst.device_port, "Device UDP port (default 47800)");

  PlayArgs ply;
  auto* play = app.add_subcommand("play", "Telemanipulation game session");
  AddCommon(play, ply.common);
  ply.mode_opt = play->add_option("--mode", ply.mode, "discrete or continuous");
  ply.scoring_opt = play->add_option("--scoring", ply.scoring, "post_hold or every_in_band");
  ply.op_opt = play->add_option("--operator", ply.op, "scripted or live");
  ply.duration_opt = play->add_option("--duration", ply.duration, "Session seconds");
  play->add_flag("--no-torque-feedback", ply.no_torque, "Disable rendered torque, keep visual zones");
  ply.gateway_addr_opt = play->add_option("--gateway-addr", ply.gateway_addr, "Gateway address");
  ply.gateway_port_opt = play->add_option("--gateway-port", ply.gateway_port, "Gateway UDP port (default 47811)");

  GatewayArgs gw;
  auto* gateway = app.add_subcommand("gateway", "WebSocket bridge for the browser client");
  AddCommon(gateway, gw.common);
  gw.ws_port_opt = gateway->add_option("--ws-port", gw.ws_port, "WebSocket port (default 47810)");
  gw.udp_port_opt = gateway->add_option("--udp-port", gw.udp_port, "UDP port for play (default 47811)");
  gw.path_opt = gateway->add_option("--path", gw.path, "WebSocket path (default /session)");
  gw.duration_opt = gateway->add_option("--duration", gw.duration, "Seconds, 0 runs until signalled");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "bihap: " << e.what() << '\n';
    return kExitUsage;
  }

  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  const Common& common = name == "offline" ? off.common
                         : name == "device" ? dev.common
                         : name == "host"   ? hst.common
                         : name == "play"   ? ply.common
                                            : gw.common;
  const fs::path out = OutputDir(common);
  const fs::path marker = out / (name + ".failed");

  auto fail = [&](int code, const std::string& what) {
    std::cerr << "bihap " << name << ": " << what << '\n';
    std::error_code ec;
    if (fs::is_directory(out, ec)) {
      std::ofstream(marker) << what << '\n';
    }
    return code;
  };

  try {
    fs::create_directories(out);
    fs::remove(marker);
    if (name == "offline") { return CmdOffline(off); }
    if (name == "device") { return CmdDevice(dev); }
    if (name == "host") { return CmdHost(hst); }
    if (name == "play") { return CmdPlay(ply); }
    return CmdGateway(gw);
  } catch (const UsageError& e) {
    return fail(kExitUsage, e.what());
  } catch (const ConfigError& e) {
    return fail(kExitUsage, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kExitUsage, e.what());
  } catch (const std::exception& e) {
    return fail(kExitRuntime, e.what());
  }
}
