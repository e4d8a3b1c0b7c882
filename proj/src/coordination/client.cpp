#include "armstack/coordination/client.hpp"

#include <algorithm>

#include "armstack/coordination/host.hpp"

namespace armstack::coordination {

ClientCore::ClientCore(std::string name) : name_(std::move(name)) {}

void ClientCore::send(MessageType type, std::string payload) {
  Message m;
  m.type = type;
  m.seq = next_seq_++;
  m.payload = std::move(payload);
  outbound_ += encode(m);
}

std::string ClientCore::take_outbound() {
  std::string out;
  out.swap(outbound_);
  return out;
}

void ClientCore::hello() {
  send(MessageType::kHello,
       payload_line("v", kProtocolVersion) + payload_line("name", name_));
}

void ClientCore::register_arm(const std::string& arm) {
  send(MessageType::kRegisterArm, payload_line("arm", arm));
}

void ClientCore::request_param(const std::string& key) {
  send(MessageType::kParamGet, payload_line("key", key));
}

void ClientCore::set_param(const std::string& key, const std::string& value) {
  params_[key] = value;
  send(MessageType::kParamSet,
       payload_line("key", key) + payload_line("value", value));
}

void ClientCore::on_bytes(std::string_view bytes, double now) {
  std::vector<Message> messages;
  if (!parser_.feed(bytes, messages)) {
    stream_ok_ = false;
    error_ = parser_.error();
  }
  // Stops first, so a stop buried behind bulk traffic in the same chunk is
  // honored before any of it takes effect.
  std::stable_partition(messages.begin(), messages.end(), [](const Message& m) {
    return m.type == MessageType::kEstop;
  });
  for (const Message& m : messages) handle(m, now);
}

void ClientCore::handle(const Message& m, double now) {
  const std::string re = payload_line("re", std::to_string(m.seq));
  switch (m.type) {
    case MessageType::kEstop:
      estopped_ = true;
      pending_start_.reset();
      arrived_.push_back({Action::Kind::kEstop, "", 0.0});
      send(MessageType::kAck, re);
      return;
    case MessageType::kHello:
      host_name_ = payload_field(m.payload, "name");
      return;
    case MessageType::kParamGet: {
      const std::string key = payload_field(m.payload, "key");
      if (key == kClockKey) {
        send(MessageType::kParamValue,
             re + payload_line("key", key) +
                 payload_line("value", format_clock(now)));
        return;
      }
      auto it = params_.find(key);
      if (it == params_.end()) {
        send(MessageType::kError, re + payload_line("msg", "not_found " + key));
        return;
      }
      send(MessageType::kParamValue,
           re + payload_line("key", key) + payload_line("value", it->second));
      return;
    }
    case MessageType::kParamSet: {
      const std::string key = payload_field(m.payload, "key");
      if (key.empty()) {
        send(MessageType::kError, re + payload_line("msg", "bad key"));
        return;
      }
      params_[key] = payload_field(m.payload, "value");
      arrived_.push_back({Action::Kind::kParam, key, 0.0});
      send(MessageType::kAck, re);
      return;
    }
    case MessageType::kTrajLoad: {
      const std::string arm = payload_field(m.payload, "arm");
      if (arm.empty()) {
        send(MessageType::kError, re + payload_line("msg", "no arm header"));
        return;
      }
      trajectories_[arm] = m.payload;
      arrived_.push_back({Action::Kind::kTrajectory, arm, 0.0});
      send(MessageType::kAck, re);
      return;
    }
    case MessageType::kSyncStart: {
      if (estopped_) {
        send(MessageType::kError, re + payload_line("msg", "estopped"));
        return;
      }
      pending_start_ = payload_number(m.payload, "t");
      send(MessageType::kAck, re);
      return;
    }
    case MessageType::kParamValue: {
      const std::string key = payload_field(m.payload, "key");
      if (!key.empty() && key[0] != '@') {
        params_[key] = payload_field(m.payload, "value");
        arrived_.push_back({Action::Kind::kParam, key, 0.0});
      }
      return;
    }
    case MessageType::kAck:
      return;
    case MessageType::kError:
      error_ = payload_field(m.payload, "msg");
      return;
    default:
      send(MessageType::kError,
           re + payload_line("msg", "unexpected " + to_string(m.type)));
      return;
  }
}

std::vector<ClientCore::Action> ClientCore::poll(double now) {
  std::vector<Action> actions = std::move(arrived_);
  arrived_.clear();
  if (pending_start_ && !estopped_ && now + 1e-12 >= *pending_start_) {
    actions.push_back({Action::Kind::kStart, "", *pending_start_});
    pending_start_.reset();
  }
  return actions;
}

void ClientCore::report_state(const std::string& arm, const std::string& state,
                              double t, bool goal_reached, const Joints& q) {
  send(MessageType::kStateReport,
       format_state_report(arm, state, t, goal_reached, q));
}

}  // namespace armstack::coordination
