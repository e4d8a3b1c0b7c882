#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace armstack::coordination {

struct SimNetConfig {
  double latency = 0.020;  // one way base delay, seconds
  double jitter = 0.005;   // extra uniform [0, jitter) per chunk
  double drop_rate = 0.0;  // probability a chunk is silently lost
  uint64_t seed = 1;
};

// Deterministic virtual time byte transport. Nodes exchange chunks over
// connections; each direction preserves order, like a stream socket, while
// per chunk delay and loss are sampled from a seeded generator.
class SimNet {
 public:
  // conn identifies the receiving endpoint; local_now is the receiving
  // node's own clock (virtual time plus its fixed clock offset).
  using Handler =
      std::function<void(int conn, const std::string& bytes, double local_now)>;

  explicit SimNet(const SimNetConfig& config = {});

  int add_node(Handler handler, double clock_offset = 0.0);

  // Returns the two connection endpoints: first for node_a, second for
  // node_b. Optional per direction base latency overrides the config.
  std::pair<int, int> connect(int node_a, int node_b);
  std::pair<int, int> connect(int node_a, int node_b, double latency_ab,
                              double latency_ba);

  void send(int conn, const std::string& bytes);

  double now() const { return now_; }
  double local_time(int node) const;
  bool idle() const { return queue_.empty(); }
  std::size_t dropped() const { return dropped_; }

  void run_until(double t);
  void run_for(double dt) { run_until(now_ + dt); }
  void run_until_idle();

 private:
  struct Node {
    Handler handler;
    double clock_offset = 0.0;
  };
  struct Endpoint {
    int node = -1;
    int peer = -1;           // the other endpoint of the link
    double base_latency = 0;  // applied to chunks sent from this endpoint
    double last_due = 0;      // keeps each direction first in, first out
  };
  struct Chunk {
    double due = 0;
    uint64_t order = 0;
    int dest = -1;  // receiving endpoint
    std::string bytes;
    bool operator>(const Chunk& other) const {
      return due != other.due ? due > other.due : order > other.order;
    }
  };

  void deliver(const Chunk& chunk);

  SimNetConfig config_;
  std::mt19937_64 rng_;
  std::vector<Node> nodes_;
  std::vector<Endpoint> endpoints_;
  std::priority_queue<Chunk, std::vector<Chunk>, std::greater<Chunk>> queue_;
  double now_ = 0.0;
  uint64_t order_ = 0;
  std::size_t dropped_ = 0;
};

}  // namespace armstack::coordination
