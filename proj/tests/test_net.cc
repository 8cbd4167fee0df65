#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "json.hpp"

#include "bihap/angles.h"
#include "bihap/feedback.h"
#include "bihap/net/gateway.h"
#include "bihap/net/live_operator.h"
#include "bihap/net/processes.h"
#include "bihap/net/udp.h"

namespace bihap::net {
namespace {

namespace p = protocol;
using namespace std::chrono_literals;

p::Message GameStateAt(uint64_t ts_us, float score = 0.0f) {
  p::Message m;
  m.timestamp_us = ts_us;
  p::GameState g;
  g.object_angle = 12.5f;
  g.target_angle = -3.0f;
  g.device_angle = 11.0f;
  g.zone = static_cast<float>(Zone::kBlue);
  g.scenario = static_cast<float>(Scenario::kNormal);
  g.vibration = 0.02f;
  g.score = score;
  g.audio = static_cast<float>(AudioCue::kDing);
  m.payload = g;
  return m;
}

TEST(ClientFrames, AngleInput) {
  const ClientFrame f = ParseClientFrame(R"({"type":"input","client_ts":12.5,"device_angle_deg":90})");
  const auto* in = std::get_if<ClientInput>(&f);
  ASSERT_NE(in, nullptr);
  ASSERT_TRUE(in->angle.has_value());
  EXPECT_DOUBLE_EQ(*in->angle, kPi / 2.0);
  EXPECT_EQ(in->client_ts, 12.5);
}

TEST(ClientFrames, RateInput) {
  const ClientFrame f = ParseClientFrame(R"({"type":"input","client_ts":1,"angular_rate_deg_s":-180})");
  const auto* in = std::get_if<ClientInput>(&f);
  ASSERT_NE(in, nullptr);
  EXPECT_FALSE(in->angle.has_value());
  EXPECT_DOUBLE_EQ(in->rate, -kPi);
}

TEST(ClientFrames, EchoIsReturnedVerbatim) {
  const std::string text = R"({"type":"echo","nonce":7,"pad":"x"})";
  const ClientFrame f = ParseClientFrame(text);
  ASSERT_TRUE(std::holds_alternative<EchoFrame>(f));
  EXPECT_EQ(std::get<EchoFrame>(f).text, text);
}

TEST(ClientFrames, Malformed) {
  for (const char* text : {
           "", "not json", "[]", R"({"type":"input"})",
           R"({"type":"input","client_ts":1})",
           R"({"type":"input","client_ts":1,"device_angle_deg":1,"angular_rate_deg_s":1})",
           R"({"type":"input","client_ts":1,"device_angle_deg":"1"})",
           R"({"type":"input","client_ts":1,"device_angle_deg":1,"extra":0})",
           R"({"type":"input","device_angle_deg":1})",
           R"({"type":"launch"})",
           R"({"client_ts":1,"device_angle_deg":1})"}) {
    EXPECT_TRUE(std::holds_alternative<std::monostate>(ParseClientFrame(text))) << text;
  }
}

TEST(StateFrames, Fields) {
  const auto j = nlohmann::json::parse(StateFrameJson(GameStateAt(2'500'000, 17.0f)));
  EXPECT_EQ(j["type"], "state");
  EXPECT_DOUBLE_EQ(j["timestamp"].get<double>(), 2.5);
  EXPECT_DOUBLE_EQ(j["object_angle_deg"].get<double>(), 12.5);
  EXPECT_DOUBLE_EQ(j["target_angle_deg"].get<double>(), -3.0);
  EXPECT_DOUBLE_EQ(j["device_angle_deg"].get<double>(), 11.0);
  EXPECT_EQ(j["zone"], "Blue");
  EXPECT_EQ(j["scenario"], "Normal");
  EXPECT_EQ(j["vibration"], true);
  EXPECT_NEAR(j["vibration_amplitude_Nm"].get<double>(), 0.02, 1e-7);
  EXPECT_EQ(j["score"], 17);
  EXPECT_EQ(j["audio"], "Ding");
  EXPECT_EQ(j.size(), 11u);
}

TEST(InputMessages, Encoding) {
  ClientInput angle;
  angle.angle = 0.5;
  const auto a = std::get<p::ImuTelemetry>(InputMessage(angle, true, 3, 99).payload);
  EXPECT_EQ(a.pitch, 1.0f);
  EXPECT_EQ(a.yaw, 0.5f);
  ClientInput rate;
  rate.rate = -0.25;
  const auto r = std::get<p::ImuTelemetry>(InputMessage(rate, false, 4, 100).payload);
  EXPECT_EQ(r.pitch, 0.0f);
  EXPECT_TRUE(std::isnan(r.yaw));
  EXPECT_EQ(r.rate_z, -0.25f);
}

TEST(GatewayCore, SingleClient) {
  GatewayCore core;
  EXPECT_TRUE(core.Connect());
  EXPECT_FALSE(core.Connect());
  EXPECT_EQ(core.rejected(), 1u);
  core.Disconnect();
  EXPECT_TRUE(core.Connect());
}

TEST(GatewayCore, BuffersLastSecondWhileDisconnected) {
  GatewayCore core(1.0);
  for (uint64_t i = 0; i <= 20; ++i) {
    EXPECT_TRUE(core.OnGameState(GameStateAt(i * 100'000)).empty());
  }
  // 0.0 .. 2.0 s at 10 Hz; frames older than 1 s before the newest are dropped.
  EXPECT_EQ(core.buffered(), 11u);
  EXPECT_EQ(core.dropped(), 10u);
  ASSERT_TRUE(core.Connect());
  const auto frames = core.TakeBuffered();
  ASSERT_EQ(frames.size(), 11u);
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(frames.front())["timestamp"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(frames.back())["timestamp"].get<double>(), 2.0);
  EXPECT_EQ(core.buffered(), 0u);
  EXPECT_EQ(core.OnGameState(GameStateAt(2'100'000)).size(), 1u);
}

TEST(GatewayCore, CountsMalformed) {
  GatewayCore core;
  core.OnClientText("{");
  core.OnClientText(R"({"type":"echo"})");
  core.OnClientText(R"({"type":"input","client_ts":1})");
  EXPECT_EQ(core.malformed(), 2u);
}

TEST(Udp, LoopbackRoundTrip) {
  UdpEndpoint a("127.0.0.1", 0);
  UdpEndpoint b("127.0.0.1", 0);
  EXPECT_FALSE(a.Send(GameStateAt(1)));
  a.SetPeer(MakeAddress("127.0.0.1", b.local_port()));
  const p::Message sent = GameStateAt(123456, 4.0f);
  ASSERT_TRUE(a.Send(sent));
  const auto got = b.Receive(1000ms);
  ASSERT_TRUE(got.has_value());
  EXPECT_EQ(got->message, sent);
  EXPECT_EQ(got->sender.port(), a.local_port());
  EXPECT_FALSE(b.Receive(20ms).has_value());
}

TEST(Udp, BindConflictIsNetError) {
  UdpEndpoint a("127.0.0.1", 0);
  EXPECT_THROW(UdpEndpoint("127.0.0.1", a.local_port()), NetError);
}

TEST(Udp, MonotonicClockAdvances) {
  const uint64_t a = MonotonicMicros();
  std::this_thread::sleep_for(5ms);
  EXPECT_GE(MonotonicMicros() - a, 4000u);
}

TEST(HostScoring, RecoversDelayFromTelemetry) {
  HostProcessConfig c;
  std::vector<HostTelemetryRow> rows;
  for (int i = 0; i < 1000; ++i) {
    if (i % 37 == 5) { continue; }  // lost datagrams
    HostTelemetryRow r;
    r.time_s = i * 0.01;
    r.desired = c.GoalAt(r.time_s);
    r.reaction = c.GoalAt(r.time_s - 0.012);
    rows.push_back(r);
  }
  const harness::MetricsReport m = ScoreHostTelemetry(c, rows);
  ASSERT_TRUE(m.latency.has_value());
  EXPECT_NEAR(*m.latency, 0.012, 0.005);
  ASSERT_TRUE(m.rmse.has_value());
  EXPECT_LT(*m.rmse, 0.002);
}

TEST(HostScoring, TooFewSamplesIsANote) {
  const harness::MetricsReport m = ScoreHostTelemetry(HostProcessConfig{}, {});
  EXPECT_FALSE(m.rmse.has_value());
  EXPECT_EQ(m.notes.count("telemetry"), 1u);
}

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = boost::asio::ip::tcp;

class LiveGateway : public ::testing::Test {
 protected:
  void SetUp() override {
    config_.ws_port = FreeTcpPort();
    UdpEndpoint probe("127.0.0.1", 0);
    config_.udp_port = probe.local_port();
  }

  void Start() {
    thread_ = std::thread([this] { stats_ = RunGateway(config_, stop_, &ready_); });
    for (int i = 0; i < 200 && !ready_; ++i) { std::this_thread::sleep_for(10ms); }
    ASSERT_TRUE(ready_);
  }

  void TearDown() override {
    stop_ = true;
    if (thread_.joinable()) { thread_.join(); }
  }

  static uint16_t FreeTcpPort() {
    boost::asio::io_context io;
    tcp::acceptor a(io, tcp::endpoint(boost::asio::ip::make_address("127.0.0.1"), 0));
    return a.local_endpoint().port();
  }

  tcp::endpoint Endpoint() const {
    return {boost::asio::ip::make_address("127.0.0.1"), config_.ws_port};
  }

  bool Upgrade(websocket::stream<tcp::socket>& ws) {
    ws.next_layer().connect(Endpoint());
    beast::error_code ec;
    ws.handshake("127.0.0.1", config_.ws_path, ec);
    return !ec;
  }

  // Status line of the reply to a raw upgrade request.
  int UpgradeStatus(const std::string& path) {
    boost::asio::io_context io;
    tcp::socket s(io);
    s.connect(Endpoint());
    http::request<http::empty_body> req{http::verb::get, path, 11};
    req.set(http::field::host, "127.0.0.1");
    req.set(http::field::upgrade, "websocket");
    req.set(http::field::connection, "upgrade");
    req.set(http::field::sec_websocket_key, "dGhlIHNhbXBsZSBub25jZQ==");
    req.set(http::field::sec_websocket_version, "13");
    http::write(s, req);
    beast::flat_buffer buf;
    http::response<http::string_body> res;
    http::read(s, buf, res);
    return res.result_int();
  }

  GatewayConfig config_;
  std::atomic<bool> stop_{false};
  std::atomic<bool> ready_{false};
  GatewayStats stats_;
  std::thread thread_;
};

// Skips inputs whose connected flag differs from @p connected.
std::optional<p::ImuTelemetry> NextInput(UdpEndpoint& play, bool connected) {
  for (int i = 0; i < 50; ++i) {
    auto d = play.Receive(100ms);
    if (!d) { continue; }
    const auto* imu = std::get_if<p::ImuTelemetry>(&d->message.payload);
    if (imu && (imu->pitch == 1.0f) == connected) { return *imu; }
  }
  return std::nullopt;
}

TEST_F(LiveGateway, SessionLifecycle) {
  Start();
  boost::asio::io_context io;

  UdpEndpoint play("127.0.0.1", 0);
  play.SetPeer(MakeAddress("127.0.0.1", config_.udp_port));
  p::Message hb;
  hb.payload = p::Heartbeat{};
  ASSERT_TRUE(play.Send(hb));
  const auto reply = play.Receive(1000ms);
  ASSERT_TRUE(reply.has_value());
  EXPECT_TRUE(std::holds_alternative<p::Heartbeat>(reply->message.payload));

  // Sent before any client connects: buffered, then flushed on connect.
  ASSERT_TRUE(play.Send(GameStateAt(MonotonicMicros(), 3.0f)));
  std::this_thread::sleep_for(50ms);

  EXPECT_EQ(UpgradeStatus("/elsewhere"), 404);

  websocket::stream<tcp::socket> first(io);
  ASSERT_TRUE(Upgrade(first));
  beast::flat_buffer buf;
  first.read(buf);
  auto j = nlohmann::json::parse(beast::buffers_to_string(buf.data()));
  EXPECT_EQ(j["type"], "state");
  EXPECT_EQ(j["score"], 3);

  EXPECT_EQ(UpgradeStatus(config_.ws_path), 409);

  const std::string echo = R"({"type":"echo","n":42})";
  first.write(boost::asio::buffer(echo));
  buf.clear();
  first.read(buf);
  EXPECT_EQ(beast::buffers_to_string(buf.data()), echo);

  first.write(boost::asio::buffer(std::string("{oops")));
  first.write(boost::asio::buffer(
      std::string(R"({"type":"input","client_ts":5,"device_angle_deg":30})")));
  auto in = NextInput(play, true);
  ASSERT_TRUE(in.has_value());
  EXPECT_EQ(in->pitch, 1.0f);
  EXPECT_NEAR(in->yaw, DegToRad(30.0), 1e-6);

  first.close(websocket::close_code::normal);
  auto frozen = NextInput(play, false);
  ASSERT_TRUE(frozen.has_value());
  EXPECT_EQ(frozen->pitch, 0.0f);
  EXPECT_NEAR(frozen->yaw, DegToRad(30.0), 1e-6);
  EXPECT_EQ(frozen->rate_z, 0.0f);

  stop_ = true;
  thread_.join();
  EXPECT_EQ(stats_.rejected, 1u);
  EXPECT_EQ(stats_.malformed, 1u);
  EXPECT_GE(stats_.inputs_forwarded, 2u);
}

TEST(LiveOperatorLink, NoGatewayIsNetError) {
  UdpEndpoint silent("127.0.0.1", 0);
  LiveLinkConfig c;
  c.gateway_port = silent.local_port();
  c.connect_timeout_s = 0.2;
  EXPECT_THROW(LiveOperator op(c), NetError);
}

TEST_F(LiveGateway, LiveOperatorFollowsClient) {
  Start();
  LiveLinkConfig link;
  link.gateway_port = config_.udp_port;
  LiveOperator op(link);
  const FeedbackCommand none;
  teleop::OperatorObservation ob;
  ob.t = 0.0;
  EXPECT_TRUE(op.Step(ob, none, 0.02).frozen);

  boost::asio::io_context io;
  websocket::stream<tcp::socket> client(io);
  ASSERT_TRUE(Upgrade(client));
  client.write(boost::asio::buffer(
      std::string(R"({"type":"input","client_ts":1,"device_angle_deg":-45})")));
  teleop::OperatorInput in;
  for (int i = 1; i <= 50; ++i) {
    ob.t = i * 0.02;
    in = op.Step(ob, none, 0.02);
    if (!in.frozen) { break; }
  }
  ASSERT_FALSE(in.frozen);
  ASSERT_TRUE(in.angle.has_value());
  EXPECT_NEAR(*in.angle, DegToRad(-45.0), 1e-6);

  teleop::SessionRow row;
  row.t = ob.t;
  row.fit_count = 9;
  op.Publish(row);
  beast::flat_buffer buf;
  client.read(buf);
  EXPECT_EQ(nlohmann::json::parse(beast::buffers_to_string(buf.data()))["score"], 9);

  client.close(websocket::close_code::normal);
  for (int i = 0; i < 50; ++i) {
    ob.t += 0.02;
    in = op.Step(ob, none, 0.02);
    if (in.frozen) { break; }
  }
  EXPECT_TRUE(in.frozen);
  EXPECT_FALSE(in.disconnected);
}

}  // namespace
}  // namespace bihap::net
