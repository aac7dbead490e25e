#include "oranlab/ric/tcp.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <stdexcept>

namespace oranlab::ric {

namespace {

std::int64_t steady_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw std::runtime_error("invalid IPv4 address: " + host);
  }
  return addr;
}

}  // namespace

bool write_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

int tcp_connect(const std::string& host, std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  auto addr = make_addr(host, port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const int err = errno;
    ::close(fd);
    throw std::runtime_error("connect " + host + ":" + std::to_string(port) + ": " + std::strerror(err));
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

TcpServer::TcpServer(RicService& ric, std::string host, std::uint16_t port)
    : ric_(ric), host_(std::move(host)), port_(port) {}

TcpServer::~TcpServer() { stop(); }

std::int64_t TcpServer::now_ms() const { return (steady_ns() - t0_ns_) / 1000000; }

void TcpServer::start() {
  if (running_) return;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  auto addr = make_addr(host_, port_);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 64) != 0) {
    const int err = errno;
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error("bind/listen " + host_ + ":" + std::to_string(port_) + ": " + std::strerror(err));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  t0_ns_ = steady_ns();
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
  ticker_ = std::thread([this] {
    while (running_) {
      ric_.tick(now_ms());
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  });
}

void TcpServer::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;  // listening socket shut down
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    auto client = std::make_shared<Client>();
    client->fd = fd;
    client->conn = ric_.open_connection(
        [fd](std::span<const std::uint8_t> b) { write_all(fd, b.data(), b.size()); },
        [fd]() { ::shutdown(fd, SHUT_RDWR); });
    std::lock_guard lk(clients_mu_);
    client->reader = std::thread([this, client] { read_loop(client); });
    clients_.push_back(client);
  }
}

void TcpServer::read_loop(std::shared_ptr<Client> client) {
  std::vector<std::uint8_t> buf(64 * 1024);
  while (running_) {
    const ssize_t n = ::recv(client->fd, buf.data(), buf.size(), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    ric_.on_bytes(client->conn, std::span<const std::uint8_t>(buf.data(), static_cast<std::size_t>(n)), now_ms());
  }
  ric_.close_connection(client->conn, now_ms());
}

void TcpServer::stop() {
  if (!running_.exchange(false)) return;
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  if (acceptor_.joinable()) acceptor_.join();
  if (ticker_.joinable()) ticker_.join();
  std::vector<std::shared_ptr<Client>> clients;
  {
    std::lock_guard lk(clients_mu_);
    clients.swap(clients_);
  }
  for (auto& c : clients) ::shutdown(c->fd, SHUT_RDWR);
  for (auto& c : clients) {
    if (c->reader.joinable()) c->reader.join();
    ::close(c->fd);
  }
}

}  // namespace oranlab::ric
