#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "armstack/coordination/message.hpp"
#include "armstack/model.hpp"
#include "armstack/types.hpp"

namespace armstack::coordination {

constexpr const char* kProtocolVersion = "1";
constexpr const char* kClockKey = "@clock";

struct RemoteState {
  std::string arm;
  std::string state;
  double t = 0.0;
  bool goal_reached = false;
  Joints q = Joints::Zero();
};

struct ClientLink {
  std::string name;
  std::vector<std::string> arms;
  // Clock relation: client local clock = host local clock + offset.
  std::optional<double> offset;
  double best_rtt = std::numeric_limits<double>::infinity();
  double worst_rtt = 0.0;
  int probes_done = 0;
  int probe_rounds = 0;
  std::optional<uint32_t> probe_seq;
  double probe_sent_at = 0.0;
  std::map<std::string, RemoteState> reports;
  std::string last_error;
  int acks = 0;
  int estop_acks = 0;
};

RemoteState parse_state_report(const std::string& payload);
std::string format_state_report(const std::string& arm,
                                const std::string& state, double t,
                                bool goal_reached, const Joints& q);

struct SyncStatus {
  enum class Phase { kIdle, kLoading, kRunning, kDone, kTimeout, kFailed };
  Phase phase = Phase::kIdle;
  double start_host = 0.0;
  std::vector<std::string> missing_clients;
  std::vector<std::string> aborted_arms;
  std::vector<std::string> completed_arms;
};

// Protocol state machine for the coordinating side. Transport free: bytes
// come in through on_bytes, replies accumulate per connection until
// take_outbound.
class HostCore {
 public:
  explicit HostCore(model::ParameterSet params = {});

  void on_connect(int conn);
  void on_disconnect(int conn);
  void on_bytes(int conn, std::string_view bytes, double now);

  std::map<int, std::string> take_outbound();

  // Round trip clock estimation against every connected client.
  void begin_clock_sync(double now, int rounds = kDefaultClockRounds);
  bool clock_synced() const;
  double worst_rtt() const;

  // Loads one trajectory per arm, waits for every acknowledgment, then
  // broadcasts a shared start instant translated into each client's clock.
  bool begin_sync_execute(const std::map<std::string, std::string>& plan,
                          double now, double ack_timeout = 1.0);
  // Advances the acknowledgment deadline; call periodically.
  void poll(double now);
  const SyncStatus& sync_status() const { return sync_; }

  void push_param(const std::string& key, const std::string& value);
  void estop_all();

  const model::ParameterSet& params() const { return params_; }
  const std::map<int, ClientLink>& clients() const { return clients_; }
  std::optional<int> conn_for_arm(const std::string& arm) const;
  const std::string& last_error() const { return error_; }

  static constexpr int kDefaultClockRounds = 5;
  static constexpr double kMinStartGuard = 0.050;
  static constexpr double kGuardRttFactor = 3.0;

 private:
  struct PendingLoad {
    int conn = -1;
    std::string client;
    std::string arm;
    bool acked = false;
  };

  void send(int conn, MessageType type, std::string payload);
  void send_probe(int conn, double now);
  void handle(int conn, const Message& m, double now);
  void handle_clock_reply(int conn, const Message& m, double now);
  void start_all_loaded(double now);
  void account_report(const ClientLink& link, const RemoteState& state);

  model::ParameterSet params_;
  std::map<int, ClientLink> clients_;
  std::map<int, FrameParser> parsers_;
  std::map<int, std::string> outbound_;
  std::map<std::string, int> arm_conn_;
  std::set<uint32_t> estop_seqs_;
  std::map<uint32_t, PendingLoad> pending_loads_;
  std::set<std::string> sync_arms_;
  SyncStatus sync_;
  double sync_deadline_ = 0.0;
  uint32_t next_seq_ = 1;
  std::string error_;
};

}  // namespace armstack::coordination
