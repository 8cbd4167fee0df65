#pragma once

/// @file
///
/// Non-blocking UDP endpoint carrying one protocol Message per datagram.

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/udp.hpp>

#include "bihap/protocol.h"

namespace bihap::net {

/// Socket setup or address resolution failed.
class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using UdpAddress = boost::asio::ip::udp::endpoint;

UdpAddress MakeAddress(const std::string& host, uint16_t port);

struct Datagram {
  protocol::Message message;
  UdpAddress sender;
};

class UdpEndpoint {
 public:
  /// Port 0 binds an ephemeral port. Throws NetError when the bind fails.
  UdpEndpoint(const std::string& bind_address, uint16_t port);

  uint16_t local_port() const;
  void SetPeer(const UdpAddress& peer) { peer_ = peer; }
  const std::optional<UdpAddress>& peer() const { return peer_; }

  /// Returns false if there is no peer or the send failed.
  bool Send(const protocol::Message& message);
  bool SendTo(const protocol::Message& message, const UdpAddress& to);

  /// Drains every datagram currently queued; undecodable ones are counted.
  std::vector<Datagram> Poll();
  /// Blocks up to @p timeout for one valid datagram.
  std::optional<Datagram> Receive(std::chrono::milliseconds timeout);

  uint64_t decode_errors() const { return decode_errors_; }

 private:
  std::optional<Datagram> ReadOne();

  boost::asio::io_context io_;
  boost::asio::ip::udp::socket socket_;
  std::optional<UdpAddress> peer_;
  uint64_t decode_errors_ = 0;
  std::vector<uint8_t> buffer_;
};

/// Microseconds on the system monotonic clock, shared by every process on
/// the host.
uint64_t MonotonicMicros();

}  // namespace bihap::net
