#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "armstack/coordination/client.hpp"
#include "armstack/coordination/host.hpp"

namespace armstack::coordination {

// Monotonic wall clock in seconds, the time base for live transports.
double wall_seconds();

// Accepts stream connections and pumps bytes through a HostCore. The core
// is serialized behind one lock; sessions are multiplexed on a poll loop.
class TcpHost {
 public:
  // port 0 binds an ephemeral port; see port() for the real one.
  TcpHost(HostCore& core, uint16_t port, const std::string& bind_addr = "0.0.0.0");
  ~TcpHost();

  TcpHost(const TcpHost&) = delete;
  TcpHost& operator=(const TcpHost&) = delete;

  uint16_t port() const { return port_; }
  bool running() const { return running_; }
  int connection_count();
  void stop();

  // Runs fn against the locked core, then flushes any queued frames.
  void with_core(const std::function<void(HostCore&)>& fn);

 private:
  void run();
  void flush_locked();
  void close_conn_locked(int fd);

  HostCore& core_;
  uint16_t port_ = 0;
  int listen_fd_ = -1;
  std::set<int> conns_;
  std::mutex mutex_;
  std::thread thread_;
  std::atomic<bool> stop_flag_{false};
  std::atomic<bool> running_{false};
};

// One outbound connection pumping bytes through a ClientCore.
class TcpClientLink {
 public:
  TcpClientLink(ClientCore& core, const std::string& host, uint16_t port);
  ~TcpClientLink();

  TcpClientLink(const TcpClientLink&) = delete;
  TcpClientLink& operator=(const TcpClientLink&) = delete;

  bool connected() const { return connected_; }
  void stop();

  void with_core(const std::function<void(ClientCore&)>& fn);
  std::vector<ClientCore::Action> poll_actions();

 private:
  void run();
  void flush_locked();

  ClientCore& core_;
  int fd_ = -1;
  std::mutex mutex_;
  std::thread thread_;
  std::atomic<bool> stop_flag_{false};
  std::atomic<bool> connected_{false};
};

}  // namespace armstack::coordination
