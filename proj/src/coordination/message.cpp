#include "armstack/coordination/message.hpp"

#include <cstdio>
#include <cstdlib>

namespace armstack::coordination {

namespace {

void put_u32(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

uint32_t get_u32(const char* p) {
  const auto* b = reinterpret_cast<const unsigned char*>(p);
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) |
         (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

}  // namespace

bool valid_type(uint8_t raw) {
  return raw >= static_cast<uint8_t>(MessageType::kHello) &&
         raw <= static_cast<uint8_t>(MessageType::kError);
}

std::string to_string(MessageType type) {
  switch (type) {
    case MessageType::kHello: return "HELLO";
    case MessageType::kRegisterArm: return "REGISTER_ARM";
    case MessageType::kParamGet: return "PARAM_GET";
    case MessageType::kParamSet: return "PARAM_SET";
    case MessageType::kParamValue: return "PARAM_VALUE";
    case MessageType::kTrajLoad: return "TRAJ_LOAD";
    case MessageType::kSyncStart: return "SYNC_START";
    case MessageType::kStateReport: return "STATE_REPORT";
    case MessageType::kEstop: return "ESTOP";
    case MessageType::kAck: return "ACK";
    case MessageType::kError: return "ERROR";
  }
  return "?";
}

std::string encode(const Message& message) {
  const std::size_t body = kFrameHeaderBytes + message.payload.size();
  std::string out;
  out.reserve(4 + body);
  put_u32(out, static_cast<uint32_t>(body));
  out.push_back(static_cast<char>(message.type));
  put_u32(out, message.seq);
  out += message.payload;
  return out;
}

bool FrameParser::feed(std::string_view bytes, std::vector<Message>& out) {
  if (!error_.empty()) return false;
  buffer_.append(bytes.data(), bytes.size());
  std::size_t pos = 0;
  while (buffer_.size() - pos >= 4) {
    const std::size_t len = get_u32(buffer_.data() + pos);
    if (len < kFrameHeaderBytes || len > kMaxFrameBytes) {
      error_ = "invalid frame length " + std::to_string(len);
      buffer_.clear();
      return false;
    }
    if (buffer_.size() - pos < 4 + len) break;
    const uint8_t raw = static_cast<uint8_t>(buffer_[pos + 4]);
    if (!valid_type(raw)) {
      error_ = "unknown message type " + std::to_string(int(raw));
      buffer_.clear();
      return false;
    }
    Message m;
    m.type = static_cast<MessageType>(raw);
    m.seq = get_u32(buffer_.data() + pos + 5);
    m.payload.assign(buffer_, pos + 4 + kFrameHeaderBytes,
                     len - kFrameHeaderBytes);
    out.push_back(std::move(m));
    pos += 4 + len;
  }
  buffer_.erase(0, pos);
  return true;
}

std::string payload_line(const std::string& key, const std::string& value) {
  return key + "=" + value + "\n";
}

std::string payload_field(const std::string& payload, const std::string& key) {
  std::size_t pos = 0;
  while (pos < payload.size()) {
    std::size_t end = payload.find('\n', pos);
    if (end == std::string::npos) end = payload.size();
    const std::string_view line(payload.data() + pos, end - pos);
    const std::size_t eq = line.find('=');
    if (eq != std::string_view::npos &&
        std::string_view(line.data(), eq) == key) {
      return std::string(line.substr(eq + 1));
    }
    pos = end + 1;
  }
  return {};
}

double payload_number(const std::string& payload, const std::string& key) {
  const std::string field = payload_field(payload, key);
  return field.empty() ? 0.0 : std::strtod(field.c_str(), nullptr);
}

std::string format_clock(double seconds) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", seconds);
  return buf;
}

}  // namespace armstack::coordination
