#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace armstack::coordination {

enum class MessageType : uint8_t {
  kHello = 1,
  kRegisterArm = 2,
  kParamGet = 3,
  kParamSet = 4,
  kParamValue = 5,
  kTrajLoad = 6,
  kSyncStart = 7,
  kStateReport = 8,
  kEstop = 9,
  kAck = 10,
  kError = 11,
};

bool valid_type(uint8_t raw);
std::string to_string(MessageType type);

struct Message {
  MessageType type = MessageType::kAck;
  uint32_t seq = 0;
  std::string payload;
};

// Frame layout: 4 byte big endian length, then the counted bytes:
// 1 byte type, 4 byte big endian sequence id, payload.
constexpr std::size_t kFrameHeaderBytes = 5;
constexpr std::size_t kMaxFrameBytes = 16 * 1024 * 1024;

std::string encode(const Message& message);

// Reassembles frames from a byte stream regardless of how it was chunked.
class FrameParser {
 public:
  // Appends completed messages to out. Returns false once the stream is
  // corrupt (oversized or undersized frame, unknown type); the connection
  // should then be dropped.
  bool feed(std::string_view bytes, std::vector<Message>& out);

  bool ok() const { return error_.empty(); }
  const std::string& error() const { return error_; }
  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::string buffer_;
  std::string error_;
};

// Payload helpers shared by host and client: payloads are newline separated
// key=value lines, the same convention as the parameter file format.
std::string payload_line(const std::string& key, const std::string& value);
std::string payload_field(const std::string& payload, const std::string& key);
double payload_number(const std::string& payload, const std::string& key);
std::string format_clock(double seconds);

}  // namespace armstack::coordination
