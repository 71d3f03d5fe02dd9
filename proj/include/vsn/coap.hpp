#ifndef VSN_COAP_HPP
#define VSN_COAP_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vsn::wire {

/// Message type nibble values on the wire.
enum class MsgType : std::uint8_t {
  Confirmable = 0,
  Acknowledgement = 2,
};

/// Supported request/response codes, stored as the raw code byte (class<<5 | detail).
enum class Code : std::uint8_t {
  Get = 0x01,         // 0.01
  Post = 0x02,        // 0.02
  Put = 0x03,         // 0.03
  Created = 0x41,     // 2.01
  Changed = 0x44,     // 2.04
  Content = 0x45,     // 2.05
  BadRequest = 0x80,  // 4.00
  NotFound = 0x84,    // 4.04
};

bool code_supported(std::uint8_t raw);
bool is_request(Code code);
int code_class(Code code);
int code_detail(Code code);
std::string code_string(Code code);  // "0.02", "2.01", ...

/// Content-format id used for SenML-JSON payloads throughout this artifact.
inline constexpr std::uint16_t kContentFormatSenmlJson = 110;
/// Plain JSON, used for control documents and overlay bodies.
inline constexpr std::uint16_t kContentFormatJson = 50;

constexpr std::size_t kMaxTokenLength = 8;

struct Message {
  MsgType type = MsgType::Confirmable;
  Code code = Code::Get;
  std::uint16_t message_id = 0;
  std::vector<std::uint8_t> token;
  std::vector<std::string> uri_path;
  std::optional<std::uint16_t> content_format;
  std::vector<std::uint8_t> payload;

  bool operator==(const Message&) const = default;
};

/// Fixed 4-byte header, token, options in ascending option-number order with
/// delta encoding (Uri-Path = 11, Content-Format = 12), 0xFF marker iff the
/// payload is nonempty.
std::vector<std::uint8_t> encode_message(const Message& message);

/// Inverse of encode_message on its image.
Message decode_message(std::span<const std::uint8_t> bytes);

std::string uri_string(const Message& message);  // segments joined with '/'

}  // namespace vsn::wire

#endif
