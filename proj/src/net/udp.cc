#include "bihap/net/udp.h"

#include <poll.h>

#include <fmt/format.h>

namespace bihap::net {

namespace asio = boost::asio;
using asio::ip::udp;

UdpAddress MakeAddress(const std::string& host, uint16_t port) {
  boost::system::error_code ec;
  const auto address = asio::ip::make_address(host, ec);
  if (ec) { throw NetError(fmt::format("invalid address '{}': {}", host, ec.message())); }
  return {address, port};
}

UdpEndpoint::UdpEndpoint(const std::string& bind_address, uint16_t port)
    : socket_(io_), buffer_(65536) {
  const UdpAddress local = MakeAddress(bind_address, port);
  boost::system::error_code ec;
  socket_.open(local.protocol(), ec);
  if (!ec) { socket_.bind(local, ec); }
  if (!ec) { socket_.non_blocking(true, ec); }
  if (ec) {
    throw NetError(fmt::format("cannot bind udp {}:{}: {}", bind_address, port, ec.message()));
  }
}

uint16_t UdpEndpoint::local_port() const { return socket_.local_endpoint().port(); }

bool UdpEndpoint::Send(const protocol::Message& message) {
  return peer_ && SendTo(message, *peer_);
}

bool UdpEndpoint::SendTo(const protocol::Message& message, const UdpAddress& to) {
  const auto bytes = protocol::Encode(message);
  boost::system::error_code ec;
  socket_.send_to(asio::buffer(bytes), to, 0, ec);
  return !ec;
}

std::optional<Datagram> UdpEndpoint::ReadOne() {
  for (;;) {
    UdpAddress sender;
    boost::system::error_code ec;
    const std::size_t n = socket_.receive_from(asio::buffer(buffer_), sender, 0, ec);
    if (ec == asio::error::would_block || ec == asio::error::try_again) { return std::nullopt; }
    // ICMP port-unreachable from an earlier send surfaces here on Linux.
    if (ec == asio::error::connection_refused) { continue; }
    if (ec) { return std::nullopt; }
    const auto result = protocol::Decode(std::span<const uint8_t>(buffer_.data(), n));
    if (!result.ok()) {
      ++decode_errors_;
      continue;
    }
    return Datagram{result.message, sender};
  }
}

std::vector<Datagram> UdpEndpoint::Poll() {
  std::vector<Datagram> out;
  while (auto d = ReadOne()) { out.push_back(std::move(*d)); }
  return out;
}

std::optional<Datagram> UdpEndpoint::Receive(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (auto d = ReadOne()) { return d; }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) { return std::nullopt; }
    pollfd fd{socket_.native_handle(), POLLIN, 0};
    ::poll(&fd, 1, static_cast<int>(left.count()));
  }
}

uint64_t MonotonicMicros() {
  return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::microseconds>(
                                   std::chrono::steady_clock::now().time_since_epoch())
                                   .count());
}

}  // namespace bihap::net
