#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "oranlab/ric/service.hpp"

namespace oranlab::ric {

/// Serves E2-lite over TCP for a RicService. One reader thread per
/// connection plus a timer thread driving RicService::tick with wall-clock
/// milliseconds since start().
class TcpServer {
 public:
  TcpServer(RicService& ric, std::string host = "127.0.0.1", std::uint16_t port = 0);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  /// Binds and starts serving; throws std::runtime_error on failure.
  void start();
  void stop();
  /// Bound port (useful when constructed with port 0).
  std::uint16_t port() const { return port_; }
  std::int64_t now_ms() const;

 private:
  struct Client {
    int fd = -1;
    ConnId conn = 0;
    std::thread reader;
  };

  void accept_loop();
  void read_loop(std::shared_ptr<Client> client);

  RicService& ric_;
  std::string host_;
  std::uint16_t port_;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::thread ticker_;
  std::mutex clients_mu_;
  std::vector<std::shared_ptr<Client>> clients_;
  std::int64_t t0_ns_ = 0;
};

/// Blocking connect helper for clients and tests; returns a socket fd or
/// throws std::runtime_error.
int tcp_connect(const std::string& host, std::uint16_t port);
/// Writes all bytes; returns false on error.
bool write_all(int fd, const std::uint8_t* data, std::size_t n);

}  // namespace oranlab::ric
