#include "bihap/net/gateway.h"

#include <cmath>
#include <iostream>
#include <memory>

#include <boost/asio/co_spawn.hpp>
#include <boost/asio/detached.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/ip/udp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/use_awaitable.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>

#include "json.hpp"

#include "bihap/angles.h"
#include "bihap/config_error.h"
#include "bihap/feedback.h"
#include "bihap/net/udp.h"

namespace bihap::net {

namespace p = protocol;
using Json = nlohmann::json;

namespace {

template <typename E>
const char* EnumName(float code, int count) {
  const int i = static_cast<int>(code);
  if (i < 0 || i >= count) { return "?"; }
  return ToString(static_cast<E>(i));
}

}  // namespace

ClientFrame ParseClientFrame(const std::string& text) {
  const Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) { return {}; }
  const auto type = j.find("type");
  if (type == j.end() || !type->is_string()) { return {}; }
  if (*type == "echo") { return EchoFrame{text}; }
  if (*type != "input") { return {}; }

  ClientInput in;
  bool has_angle = false;
  bool has_rate = false;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "type") { continue; }
    if (!it->is_number()) { return {}; }
    const double v = it->get<double>();
    if (!std::isfinite(v)) { return {}; }
    if (key == "client_ts") {
      in.client_ts = v;
    } else if (key == "device_angle_deg") {
      in.angle = DegToRad(v);
      has_angle = true;
    } else if (key == "angular_rate_deg_s") {
      in.rate = DegToRad(v);
      has_rate = true;
    } else {
      return {};
    }
  }
  if (has_angle == has_rate || !j.contains("client_ts")) { return {}; }
  return in;
}

std::string StateFrameJson(const p::Message& m) {
  const auto& g = std::get<p::GameState>(m.payload);
  nlohmann::ordered_json j;
  j["type"] = "state";
  j["timestamp"] = static_cast<double>(m.timestamp_us) * 1e-6;
  j["object_angle_deg"] = g.object_angle;
  j["target_angle_deg"] = g.target_angle;
  j["device_angle_deg"] = g.device_angle;
  j["zone"] = EnumName<Zone>(g.zone, 4);
  j["scenario"] = EnumName<Scenario>(g.scenario, 5);
  j["vibration"] = g.vibration > 0.0f;
  j["vibration_amplitude_Nm"] = g.vibration;
  j["score"] = static_cast<int64_t>(g.score);
  j["audio"] = EnumName<AudioCue>(g.audio, 3);
  return j.dump();
}

p::Message InputMessage(const ClientInput& input, bool connected, uint16_t sequence,
                        uint64_t timestamp_us) {
  p::Message m;
  m.sequence = sequence;
  m.timestamp_us = timestamp_us;
  p::ImuTelemetry imu;
  imu.pitch = connected ? 1.0f : 0.0f;
  imu.yaw = input.angle ? static_cast<float>(*input.angle) : std::nanf("");
  imu.rate_z = static_cast<float>(input.rate);
  m.payload = imu;
  return m;
}

bool GatewayCore::Connect() {
  if (connected_) {
    ++rejected_;
    return false;
  }
  connected_ = true;
  return true;
}

void GatewayCore::Disconnect() { connected_ = false; }

std::vector<std::string> GatewayCore::OnGameState(const p::Message& message) {
  std::string frame = StateFrameJson(message);
  if (connected_) { return {std::move(frame)}; }
  buffer_.emplace_back(message.timestamp_us, std::move(frame));
  const double window_us = buffer_seconds_ * 1e6;
  while (!buffer_.empty() &&
         static_cast<double>(message.timestamp_us) - static_cast<double>(buffer_.front().first) >
             window_us) {
    buffer_.pop_front();
    ++dropped_;
  }
  return {};
}

std::vector<std::string> GatewayCore::TakeBuffered() {
  std::vector<std::string> out;
  for (auto& [ts, frame] : buffer_) { out.push_back(std::move(frame)); }
  buffer_.clear();
  return out;
}

ClientFrame GatewayCore::OnClientText(const std::string& text) {
  ClientFrame f = ParseClientFrame(text);
  if (std::holds_alternative<std::monostate>(f)) { ++malformed_; }
  return f;
}

void GatewayConfig::Validate() const {
  FieldChecker c("gateway config");
  c.Check(!ws_path.empty() && ws_path.front() == '/', "ws_path");
  c.Check(std::isfinite(buffer_seconds) && buffer_seconds > 0.0, "buffer_seconds");
  c.Check(std::isfinite(duration) && duration >= 0.0, "duration");
  c.ThrowIfAny();
}

namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using asio::awaitable;
using asio::use_awaitable;
using asio::ip::tcp;
using asio::ip::udp;
using WsStream = websocket::stream<beast::tcp_stream>;

class GatewayServer {
 public:
  GatewayServer(const GatewayConfig& config, const std::atomic<bool>& stop)
      : config_(config),
        stop_(stop),
        core_(config.buffer_seconds),
        acceptor_(io_),
        udp_(io_),
        timer_(io_) {
    boost::system::error_code ec;
    const auto address = asio::ip::make_address(config.bind_address, ec);
    if (ec) { throw NetError(fmt::format("invalid address '{}'", config.bind_address)); }
    const tcp::endpoint ws_at(address, config.ws_port);
    acceptor_.open(ws_at.protocol(), ec);
    if (!ec) { acceptor_.set_option(asio::socket_base::reuse_address(true), ec); }
    if (!ec) { acceptor_.bind(ws_at, ec); }
    if (!ec) { acceptor_.listen(asio::socket_base::max_listen_connections, ec); }
    if (ec) {
      throw NetError(fmt::format("cannot listen on tcp {}:{}: {}", config.bind_address,
                                 config.ws_port, ec.message()));
    }
    const udp::endpoint udp_at(address, config.udp_port);
    udp_.open(udp_at.protocol(), ec);
    if (!ec) { udp_.bind(udp_at, ec); }
    if (ec) {
      throw NetError(fmt::format("cannot bind udp {}:{}: {}", config.bind_address,
                                 config.udp_port, ec.message()));
    }
  }

  GatewayStats Run(std::atomic<bool>* ready) {
    asio::co_spawn(io_, Accept(), asio::detached);
    asio::co_spawn(io_, ReceiveUdp(), asio::detached);
    asio::co_spawn(io_, Watch(), asio::detached);
    if (ready) { ready->store(true); }
    io_.run();
    GatewayStats s = stats_;
    s.malformed = core_.malformed();
    s.dropped = core_.dropped();
    s.rejected = core_.rejected();
    return s;
  }

 private:
  awaitable<void> Watch() {
    const auto start = std::chrono::steady_clock::now();
    for (;;) {
      timer_.expires_after(std::chrono::milliseconds(20));
      co_await timer_.async_wait(use_awaitable);
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (stop_.load() || (config_.duration > 0.0 && elapsed >= config_.duration)) {
        io_.stop();
        co_return;
      }
    }
  }

  awaitable<void> Accept() {
    for (;;) {
      tcp::socket socket = co_await acceptor_.async_accept(use_awaitable);
      asio::co_spawn(io_, Serve(std::move(socket)), asio::detached);
    }
  }

  awaitable<void> Reject(beast::tcp_stream& stream, http::status status, const char* why) {
    http::response<http::string_body> res{status, 11};
    res.set(http::field::content_type, "text/plain");
    res.body() = why;
    res.prepare_payload();
    co_await http::async_write(stream, res, use_awaitable);
    beast::error_code ec;
    stream.socket().shutdown(tcp::socket::shutdown_send, ec);
  }

  awaitable<void> Serve(tcp::socket socket) {
    auto ws = std::make_shared<WsStream>(std::move(socket));
    bool admitted = false;
    try {
      beast::flat_buffer buffer;
      http::request<http::string_body> req;
      co_await http::async_read(ws->next_layer(), buffer, req, use_awaitable);
      if (!websocket::is_upgrade(req) || req.target() != config_.ws_path) {
        co_await Reject(ws->next_layer(), http::status::not_found, "no such endpoint\n");
        co_return;
      }
      if (!core_.Connect()) {
        co_await Reject(ws->next_layer(), http::status::conflict, "a client is already connected\n");
        co_return;
      }
      admitted = true;
      co_await ws->async_accept(req, use_awaitable);
      client_ = ws;
      for (auto& frame : core_.TakeBuffered()) { Enqueue(std::move(frame)); }

      for (;;) {
        beast::flat_buffer in;
        co_await ws->async_read(in, use_awaitable);
        const std::string text = beast::buffers_to_string(in.data());
        const ClientFrame frame = core_.OnClientText(text);
        if (const auto* input = std::get_if<ClientInput>(&frame)) {
          last_input_ = *input;
          Forward(*input, true);
        } else if (const auto* echo = std::get_if<EchoFrame>(&frame)) {
          Enqueue(echo->text);
        }
      }
    } catch (const std::exception&) {
    }
    if (admitted) {
      if (client_ == ws) { client_.reset(); }
      core_.Disconnect();
      outbox_.clear();
      // Hold the last angle, stop any rate input, and flag the freeze.
      ClientInput frozen = last_input_;
      frozen.rate = 0.0;
      Forward(frozen, false);
    }
  }

  void Forward(const ClientInput& input, bool connected) {
    if (!play_) { return; }
    const auto bytes = p::Encode(
        InputMessage(input, connected, seq_.Next(p::Kind::kImuTelemetry), MonotonicMicros()));
    boost::system::error_code ec;
    udp_.send_to(asio::buffer(bytes), *play_, 0, ec);
    if (!ec) { ++stats_.inputs_forwarded; }
  }

  void Enqueue(std::string frame) {
    outbox_.push_back(std::move(frame));
    if (!writing_ && client_) {
      writing_ = true;
      asio::co_spawn(io_, Drain(client_), asio::detached);
    }
  }

  awaitable<void> Drain(std::shared_ptr<WsStream> ws) {
    try {
      while (!outbox_.empty() && client_ == ws) {
        const std::string frame = std::move(outbox_.front());
        outbox_.pop_front();
        ws->text(true);
        co_await ws->async_write(asio::buffer(frame), use_awaitable);
        ++stats_.frames_sent;
      }
    } catch (const std::exception&) {
    }
    writing_ = false;
  }

  awaitable<void> ReceiveUdp() {
    std::vector<uint8_t> buffer(65536);
    for (;;) {
      udp::endpoint sender;
      std::size_t n = 0;
      try {
        n = co_await udp_.async_receive_from(asio::buffer(buffer), sender, use_awaitable);
      } catch (const boost::system::system_error&) {
        continue;
      }
      const auto decoded = p::Decode(std::span<const uint8_t>(buffer.data(), n));
      if (!decoded.ok()) { continue; }
      const p::Message& m = decoded.message;
      if (!play_ || *play_ != sender) { state_tracker_ = {}; }
      play_ = sender;
      if (std::holds_alternative<p::Heartbeat>(m.payload)) {
        p::Message reply;
        reply.sequence = seq_.Next(p::Kind::kHeartbeat);
        reply.timestamp_us = MonotonicMicros();
        const auto bytes = p::Encode(reply);
        boost::system::error_code ec;
        udp_.send_to(asio::buffer(bytes), sender, 0, ec);
        if (!core_.connected()) { Forward(last_input_, false); }
      } else if (std::holds_alternative<p::GameState>(m.payload)) {
        if (!state_tracker_.Accept(m.sequence)) { continue; }
        for (auto& frame : core_.OnGameState(m)) { Enqueue(std::move(frame)); }
      }
    }
  }

  GatewayConfig config_;
  const std::atomic<bool>& stop_;
  GatewayCore core_;
  asio::io_context io_;
  tcp::acceptor acceptor_;
  udp::socket udp_;
  asio::steady_timer timer_;
  std::shared_ptr<WsStream> client_;
  std::deque<std::string> outbox_;
  bool writing_ = false;
  std::optional<udp::endpoint> play_;
  ClientInput last_input_;
  p::SequenceCounter seq_;
  p::SequenceTracker state_tracker_;
  GatewayStats stats_;
};

}  // namespace

GatewayStats RunGateway(const GatewayConfig& config, const std::atomic<bool>& stop,
                        std::atomic<bool>* ready) {
  config.Validate();
  GatewayServer server(config, stop);
  return server.Run(ready);
}

}  // namespace bihap::net
