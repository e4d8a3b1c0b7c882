#include "armstack/coordination/host.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace armstack::coordination {

namespace {

std::string joints_to_text(const Joints& q) {
  char buf[32];
  std::string out;
  for (int i = 0; i < kNumJoints; ++i) {
    std::snprintf(buf, sizeof(buf), i ? " %.12g" : "%.12g", q[i]);
    out += buf;
  }
  return out;
}

Joints joints_from_text(const std::string& text) {
  Joints q = Joints::Zero();
  std::istringstream in(text);
  for (int i = 0; i < kNumJoints; ++i) in >> q[i];
  return q;
}

// Non-throwing sequence id parse; peers may send garbage.
std::optional<uint32_t> parse_re(const std::string& payload) {
  const std::string field = payload_field(payload, "re");
  if (field.empty()) return std::nullopt;
  char* end = nullptr;
  const unsigned long value = std::strtoul(field.c_str(), &end, 10);
  if (end == field.c_str()) return std::nullopt;
  return static_cast<uint32_t>(value);
}

}  // namespace

RemoteState parse_state_report(const std::string& payload) {
  RemoteState s;
  s.arm = payload_field(payload, "arm");
  s.state = payload_field(payload, "state");
  s.t = payload_number(payload, "t");
  s.goal_reached = payload_field(payload, "goal") == "1";
  s.q = joints_from_text(payload_field(payload, "q"));
  return s;
}

std::string format_state_report(const std::string& arm,
                                const std::string& state, double t,
                                bool goal_reached, const Joints& q) {
  std::string payload = payload_line("arm", arm) + payload_line("state", state);
  payload += payload_line("t", format_clock(t));
  payload += payload_line("goal", goal_reached ? "1" : "0");
  payload += payload_line("q", joints_to_text(q));
  return payload;
}

HostCore::HostCore(model::ParameterSet params) : params_(std::move(params)) {}

void HostCore::on_connect(int conn) {
  clients_[conn];
  parsers_[conn];
}

void HostCore::on_disconnect(int conn) {
  for (auto it = arm_conn_.begin(); it != arm_conn_.end();) {
    it = it->second == conn ? arm_conn_.erase(it) : std::next(it);
  }
  clients_.erase(conn);
  parsers_.erase(conn);
  outbound_.erase(conn);
}

void HostCore::send(int conn, MessageType type, std::string payload) {
  Message m;
  m.type = type;
  m.seq = next_seq_++;
  m.payload = std::move(payload);
  outbound_[conn] += encode(m);
}

std::map<int, std::string> HostCore::take_outbound() {
  std::map<int, std::string> out;
  out.swap(outbound_);
  return out;
}

void HostCore::on_bytes(int conn, std::string_view bytes, double now) {
  auto parser = parsers_.find(conn);
  if (parser == parsers_.end()) return;
  std::vector<Message> messages;
  if (!parser->second.feed(bytes, messages)) {
    clients_[conn].last_error = parser->second.error();
  }
  for (const Message& m : messages) handle(conn, m, now);
}

void HostCore::handle(int conn, const Message& m, double now) {
  ClientLink& link = clients_[conn];
  const std::string re = payload_line("re", std::to_string(m.seq));
  switch (m.type) {
    case MessageType::kHello: {
      if (payload_field(m.payload, "v") != kProtocolVersion) {
        send(conn, MessageType::kError, re + payload_line("msg", "version"));
        return;
      }
      link.name = payload_field(m.payload, "name");
      send(conn, MessageType::kHello,
           re + payload_line("v", kProtocolVersion) +
               payload_line("name", "host"));
      return;
    }
    case MessageType::kRegisterArm: {
      const std::string arm = payload_field(m.payload, "arm");
      if (arm.empty()) {
        send(conn, MessageType::kError, re + payload_line("msg", "no arm"));
        return;
      }
      if (arm_conn_.count(arm) && arm_conn_[arm] != conn) {
        send(conn, MessageType::kError,
             re + payload_line("msg", "duplicate arm " + arm));
        return;
      }
      arm_conn_[arm] = conn;
      if (std::find(link.arms.begin(), link.arms.end(), arm) ==
          link.arms.end()) {
        link.arms.push_back(arm);
      }
      send(conn, MessageType::kAck, re);
      return;
    }
    case MessageType::kParamGet: {
      const std::string key = payload_field(m.payload, "key");
      if (key == kClockKey) {
        send(conn, MessageType::kParamValue,
             re + payload_line("key", key) +
                 payload_line("value", format_clock(now)));
        return;
      }
      auto it = params_.find(key);
      if (it == params_.end()) {
        send(conn, MessageType::kError,
             re + payload_line("msg", "not_found " + key));
        return;
      }
      send(conn, MessageType::kParamValue,
           re + payload_line("key", key) + payload_line("value", it->second));
      return;
    }
    case MessageType::kParamSet: {
      const std::string key = payload_field(m.payload, "key");
      const std::string value = payload_field(m.payload, "value");
      if (key.empty() || key[0] == '@') {
        send(conn, MessageType::kError, re + payload_line("msg", "bad key"));
        return;
      }
      params_[key] = value;
      send(conn, MessageType::kAck, re);
      // Keep every other client's cache in step with the store.
      for (const auto& [other, _] : clients_) {
        if (other != conn) {
          send(other, MessageType::kParamSet,
               payload_line("key", key) + payload_line("value", value));
        }
      }
      return;
    }
    case MessageType::kParamValue:
      handle_clock_reply(conn, m, now);
      return;
    case MessageType::kStateReport: {
      const RemoteState state = parse_state_report(m.payload);
      link.reports[state.arm] = state;
      account_report(link, state);
      return;
    }
    case MessageType::kAck: {
      ++link.acks;
      if (const auto acked = parse_re(m.payload)) {
        if (estop_seqs_.erase(*acked)) ++link.estop_acks;
        auto pending = pending_loads_.find(*acked);
        if (pending != pending_loads_.end()) {
          pending->second.acked = true;
          const bool all = std::all_of(
              pending_loads_.begin(), pending_loads_.end(),
              [](const auto& kv) { return kv.second.acked; });
          if (all && sync_.phase == SyncStatus::Phase::kLoading) {
            start_all_loaded(now);
          }
        }
      }
      return;
    }
    case MessageType::kError:
      link.last_error = payload_field(m.payload, "msg");
      return;
    default:
      send(conn, MessageType::kError,
           re + payload_line("msg", "unexpected " + to_string(m.type)));
      return;
  }
}

void HostCore::begin_clock_sync(double now, int rounds) {
  for (auto& [conn, link] : clients_) {
    link.probe_rounds = rounds;
    link.probes_done = 0;
    link.best_rtt = std::numeric_limits<double>::infinity();
    link.worst_rtt = 0.0;
    link.offset.reset();
    send_probe(conn, now);
  }
}

void HostCore::send_probe(int conn, double now) {
  ClientLink& link = clients_[conn];
  const uint32_t seq = next_seq_++;
  Message m;
  m.type = MessageType::kParamGet;
  m.seq = seq;
  m.payload = payload_line("key", kClockKey);
  outbound_[conn] += encode(m);
  link.probe_seq = seq;
  link.probe_sent_at = now;
}

void HostCore::handle_clock_reply(int conn, const Message& m, double now) {
  ClientLink& link = clients_[conn];
  if (payload_field(m.payload, "key") != kClockKey || !link.probe_seq) return;
  const auto re = parse_re(m.payload);
  if (!re || *re != *link.probe_seq) return;
  const double t0 = link.probe_sent_at;
  const double t_client = payload_number(m.payload, "value");
  const double rtt = now - t0;
  // Midpoint estimate: assume the reply was stamped halfway through the
  // round trip. Error is bounded by half the path asymmetry.
  const double estimate = t_client - 0.5 * (t0 + now);
  if (rtt < link.best_rtt) {
    link.best_rtt = rtt;
    link.offset = estimate;
  }
  link.worst_rtt = std::max(link.worst_rtt, rtt);
  link.probe_seq.reset();
  ++link.probes_done;
  if (link.probes_done < link.probe_rounds) send_probe(conn, now);
}

bool HostCore::clock_synced() const {
  if (clients_.empty()) return false;
  return std::all_of(clients_.begin(), clients_.end(), [](const auto& kv) {
    return kv.second.offset && kv.second.probes_done >= kv.second.probe_rounds;
  });
}

double HostCore::worst_rtt() const {
  double worst = 0.0;
  for (const auto& [_, link] : clients_) {
    worst = std::max(worst, link.worst_rtt);
  }
  return worst;
}

bool HostCore::begin_sync_execute(
    const std::map<std::string, std::string>& plan, double now,
    double ack_timeout) {
  if (plan.empty()) {
    error_ = "empty plan";
    return false;
  }
  pending_loads_.clear();
  sync_arms_.clear();
  sync_ = SyncStatus{};
  for (const auto& [arm, text] : plan) {
    auto it = arm_conn_.find(arm);
    if (it == arm_conn_.end()) {
      error_ = "arm not registered: " + arm;
      return false;
    }
    const ClientLink& link = clients_.at(it->second);
    if (!link.offset) {
      error_ = "clock sync incomplete for " + link.name;
      return false;
    }
    const uint32_t seq = next_seq_++;
    Message m;
    m.type = MessageType::kTrajLoad;
    m.seq = seq;
    m.payload = text;
    outbound_[it->second] += encode(m);
    pending_loads_[seq] = {it->second, link.name, arm, false};
    sync_arms_.insert(arm);
  }
  sync_.phase = SyncStatus::Phase::kLoading;
  sync_deadline_ = now + ack_timeout;
  error_.clear();
  return true;
}

void HostCore::start_all_loaded(double now) {
  const double guard = std::max(kGuardRttFactor * worst_rtt(), kMinStartGuard);
  sync_.start_host = now + guard;
  std::set<int> conns;
  for (const auto& [_, load] : pending_loads_) conns.insert(load.conn);
  for (int conn : conns) {
    const ClientLink& link = clients_.at(conn);
    const double start_client = sync_.start_host + *link.offset;
    send(conn, MessageType::kSyncStart,
         payload_line("t", format_clock(start_client)));
  }
  sync_.phase = SyncStatus::Phase::kRunning;
}

void HostCore::poll(double now) {
  if (sync_.phase == SyncStatus::Phase::kLoading && now > sync_deadline_) {
    sync_.phase = SyncStatus::Phase::kTimeout;
    std::set<std::string> missing;
    for (const auto& [_, load] : pending_loads_) {
      if (!load.acked) missing.insert(load.client);
    }
    sync_.missing_clients.assign(missing.begin(), missing.end());
  }
}

void HostCore::account_report(const ClientLink& link,
                              const RemoteState& state) {
  if (sync_.phase != SyncStatus::Phase::kRunning ||
      !sync_arms_.count(state.arm)) {
    return;
  }
  auto& done = sync_.completed_arms;
  auto& aborted = sync_.aborted_arms;
  auto listed = [&](const std::vector<std::string>& v) {
    return std::find(v.begin(), v.end(), state.arm) != v.end();
  };
  if (listed(done) || listed(aborted)) return;
  if (state.state == "fault" || state.state == "estopped") {
    aborted.push_back(state.arm);
  } else if (state.state == "idle" && state.goal_reached) {
    // A report stamped before the agreed start is leftover idle chatter
    // from the previous motion, not a completion.
    if (link.offset && state.t - *link.offset < sync_.start_host - 1e-9)
      return;
    done.push_back(state.arm);
  }
  if (done.size() + aborted.size() == sync_arms_.size()) {
    sync_.phase = aborted.empty() ? SyncStatus::Phase::kDone
                                  : SyncStatus::Phase::kFailed;
  }
}

void HostCore::push_param(const std::string& key, const std::string& value) {
  params_[key] = value;
  for (const auto& [conn, _] : clients_) {
    send(conn, MessageType::kParamSet,
         payload_line("key", key) + payload_line("value", value));
  }
}

void HostCore::estop_all() {
  for (const auto& [conn, _] : clients_) {
    estop_seqs_.insert(next_seq_);
    send(conn, MessageType::kEstop, "");
  }
}

std::optional<int> HostCore::conn_for_arm(const std::string& arm) const {
  auto it = arm_conn_.find(arm);
  if (it == arm_conn_.end()) return std::nullopt;
  return it->second;
}

}  // namespace armstack::coordination
