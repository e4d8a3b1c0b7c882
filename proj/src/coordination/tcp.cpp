#include "armstack/coordination/tcp.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <stdexcept>

namespace armstack::coordination {

namespace {

constexpr int kPollMs = 20;
constexpr std::size_t kReadChunk = 64 * 1024;

void write_all(int fd, const std::string& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n =
        ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n <= 0) return;  // peer gone; reader will observe the close
    off += static_cast<std::size_t>(n);
  }
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

}  // namespace

double wall_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

TcpHost::TcpHost(HostCore& core, uint16_t port, const std::string& bind_addr)
    : core_(core) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind_addr.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw std::runtime_error("bad bind address " + bind_addr);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) <
          0 ||
      ::listen(listen_fd_, 16) < 0) {
    ::close(listen_fd_);
    throw std::runtime_error("bind failed on port " + std::to_string(port));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  thread_ = std::thread([this] { run(); });
}

TcpHost::~TcpHost() { stop(); }

void TcpHost::stop() {
  stop_flag_ = true;
  if (thread_.joinable()) thread_.join();
  running_ = false;
}

int TcpHost::connection_count() {
  std::lock_guard lock(mutex_);
  return static_cast<int>(conns_.size());
}

void TcpHost::with_core(const std::function<void(HostCore&)>& fn) {
  std::lock_guard lock(mutex_);
  fn(core_);
  flush_locked();
}

void TcpHost::flush_locked() {
  for (auto& [fd, bytes] : core_.take_outbound()) {
    if (conns_.count(fd)) write_all(fd, bytes);
  }
}

void TcpHost::close_conn_locked(int fd) {
  ::close(fd);
  conns_.erase(fd);
  core_.on_disconnect(fd);
}

void TcpHost::run() {
  std::vector<char> buffer(kReadChunk);
  while (!stop_flag_) {
    std::vector<pollfd> fds;
    fds.push_back({listen_fd_, POLLIN, 0});
    {
      std::lock_guard lock(mutex_);
      for (int fd : conns_) fds.push_back({fd, POLLIN, 0});
    }
    const int ready = ::poll(fds.data(), fds.size(), kPollMs);
    if (ready <= 0) continue;
    if (fds[0].revents & POLLIN) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd >= 0) {
        set_nodelay(fd);
        std::lock_guard lock(mutex_);
        conns_.insert(fd);
        core_.on_connect(fd);
        flush_locked();
      }
    }
    for (std::size_t i = 1; i < fds.size(); ++i) {
      if (!(fds[i].revents & (POLLIN | POLLERR | POLLHUP))) continue;
      const int fd = fds[i].fd;
      const ssize_t n = ::recv(fd, buffer.data(), buffer.size(), 0);
      std::lock_guard lock(mutex_);
      if (!conns_.count(fd)) continue;
      if (n <= 0) {
        close_conn_locked(fd);
        continue;
      }
      core_.on_bytes(fd, std::string_view(buffer.data(), n), wall_seconds());
      flush_locked();
    }
  }
  std::lock_guard lock(mutex_);
  for (int fd : conns_) ::close(fd);
  conns_.clear();
  ::close(listen_fd_);
  listen_fd_ = -1;
}

TcpClientLink::TcpClientLink(ClientCore& core, const std::string& host,
                             uint16_t port)
    : core_(core) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw std::runtime_error("socket failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    throw std::runtime_error("bad host address " + host);
  }
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    ::close(fd_);
    throw std::runtime_error("connect failed to " + host + ":" +
                             std::to_string(port));
  }
  set_nodelay(fd_);
  connected_ = true;
  thread_ = std::thread([this] { run(); });
}

TcpClientLink::~TcpClientLink() { stop(); }

void TcpClientLink::stop() {
  stop_flag_ = true;
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  if (thread_.joinable()) thread_.join();
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  connected_ = false;
}

void TcpClientLink::with_core(const std::function<void(ClientCore&)>& fn) {
  std::lock_guard lock(mutex_);
  fn(core_);
  flush_locked();
}

std::vector<ClientCore::Action> TcpClientLink::poll_actions() {
  std::lock_guard lock(mutex_);
  auto actions = core_.poll(wall_seconds());
  flush_locked();
  return actions;
}

void TcpClientLink::flush_locked() {
  const std::string bytes = core_.take_outbound();
  if (!bytes.empty() && fd_ >= 0 && connected_) write_all(fd_, bytes);
}

void TcpClientLink::run() {
  std::vector<char> buffer(kReadChunk);
  while (!stop_flag_) {
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, kPollMs);
    if (ready <= 0) continue;
    const ssize_t n = ::recv(fd_, buffer.data(), buffer.size(), 0);
    if (n <= 0) {
      connected_ = false;
      return;  // stop() owns the descriptor
    }
    std::lock_guard lock(mutex_);
    core_.on_bytes(std::string_view(buffer.data(), n), wall_seconds());
    flush_locked();
  }
}

}  // namespace armstack::coordination
