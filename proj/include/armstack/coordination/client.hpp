#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "armstack/coordination/message.hpp"
#include "armstack/model.hpp"
#include "armstack/types.hpp"

namespace armstack::coordination {

// Protocol state machine for one client machine. Transport free, like
// HostCore. Emergency stops are applied before anything else that arrived
// in the same chunk, so a stop queued behind trajectory traffic still wins.
class ClientCore {
 public:
  explicit ClientCore(std::string name);

  // Handshake and arm ownership; queue these right after connecting.
  void hello();
  void register_arm(const std::string& arm);

  // Parameter traffic toward the coordinating side. Replies land in
  // params() and surface as kParam actions.
  void request_param(const std::string& key);
  void set_param(const std::string& key, const std::string& value);

  void on_bytes(std::string_view bytes, double now);
  std::string take_outbound();

  struct Action {
    enum class Kind { kStart, kEstop, kTrajectory, kParam };
    Kind kind = Kind::kStart;
    std::string name;        // arm for kTrajectory, key for kParam
    double start_time = 0.0; // local clock, for kStart
  };
  // Returns estops and loads seen since the last poll, plus a start order
  // once the local clock reaches the agreed instant.
  std::vector<Action> poll(double now);

  // t is the client's local clock; the host maps it through the link offset.
  void report_state(const std::string& arm, const std::string& state,
                    double t, bool goal_reached, const Joints& q);
  void clear_estop() { estopped_ = false; }

  bool estopped() const { return estopped_; }
  std::optional<double> pending_start() const { return pending_start_; }
  const model::ParameterSet& params() const { return params_; }
  const std::map<std::string, std::string>& trajectories() const {
    return trajectories_;
  }
  const std::string& name() const { return name_; }
  const std::string& host_name() const { return host_name_; }
  bool handshake_done() const { return !host_name_.empty(); }
  bool stream_ok() const { return stream_ok_; }
  const std::string& last_error() const { return error_; }

 private:
  void send(MessageType type, std::string payload);
  void handle(const Message& m, double now);

  std::string name_;
  std::string host_name_;
  FrameParser parser_;
  std::string outbound_;
  model::ParameterSet params_;
  std::map<std::string, std::string> trajectories_;
  std::vector<Action> arrived_;
  std::optional<double> pending_start_;
  bool estopped_ = false;
  bool stream_ok_ = true;
  uint32_t next_seq_ = 1;
  std::string error_;
};

}  // namespace armstack::coordination
