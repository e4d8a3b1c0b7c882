#include "armstack/coordination/simnet.hpp"

#include <algorithm>
#include <stdexcept>

namespace armstack::coordination {

SimNet::SimNet(const SimNetConfig& config)
    : config_(config), rng_(config.seed) {}

int SimNet::add_node(Handler handler, double clock_offset) {
  nodes_.push_back({std::move(handler), clock_offset});
  return static_cast<int>(nodes_.size()) - 1;
}

std::pair<int, int> SimNet::connect(int node_a, int node_b) {
  return connect(node_a, node_b, config_.latency, config_.latency);
}

std::pair<int, int> SimNet::connect(int node_a, int node_b, double latency_ab,
                                    double latency_ba) {
  const int a = static_cast<int>(endpoints_.size());
  const int b = a + 1;
  endpoints_.push_back({node_a, b, latency_ab, 0.0});
  endpoints_.push_back({node_b, a, latency_ba, 0.0});
  return {a, b};
}

void SimNet::send(int conn, const std::string& bytes) {
  auto& src = endpoints_.at(conn);
  if (std::uniform_real_distribution<double>(0.0, 1.0)(rng_) <
      config_.drop_rate) {
    ++dropped_;
    return;
  }
  const double delay =
      src.base_latency +
      std::uniform_real_distribution<double>(0.0, config_.jitter)(rng_);
  const double due = std::max(now_ + delay, src.last_due);
  src.last_due = due;
  queue_.push({due, order_++, src.peer, bytes});
}

double SimNet::local_time(int node) const {
  return now_ + nodes_.at(node).clock_offset;
}

void SimNet::deliver(const Chunk& chunk) {
  const auto& dest = endpoints_.at(chunk.dest);
  const auto& node = nodes_.at(dest.node);
  if (node.handler) {
    node.handler(chunk.dest, chunk.bytes, chunk.due + node.clock_offset);
  }
}

void SimNet::run_until(double t) {
  while (!queue_.empty() && queue_.top().due <= t) {
    const Chunk chunk = queue_.top();
    queue_.pop();
    now_ = chunk.due;
    deliver(chunk);
  }
  now_ = std::max(now_, t);
}

void SimNet::run_until_idle() {
  while (!queue_.empty()) {
    const Chunk chunk = queue_.top();
    queue_.pop();
    now_ = std::max(now_, chunk.due);
    deliver(chunk);
  }
}

}  // namespace armstack::coordination
