#include "vsn/coap.hpp"

#include <array>

#include "vsn/errors.hpp"

namespace vsn::wire {

namespace {

constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kPayloadMarker = 0xFF;
constexpr std::uint16_t kOptionUriPath = 11;
constexpr std::uint16_t kOptionContentFormat = 12;

constexpr std::array<std::uint8_t, 8> kSupportedCodes = {
    0x01, 0x02, 0x03, 0x41, 0x44, 0x45, 0x80, 0x84};

// Option delta/length nibble plus its extended bytes.
void put_option_field(std::vector<std::uint8_t>& out, std::size_t ext_at, unsigned value,
                      std::uint8_t& nibble) {
  if (value < 13) {
    nibble = static_cast<std::uint8_t>(value);
  } else if (value <= 268) {
    nibble = 13;
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(ext_at),
               static_cast<std::uint8_t>(value - 13));
  } else {
    nibble = 14;
    unsigned ext = value - 269;
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(ext_at),
               {static_cast<std::uint8_t>(ext >> 8), static_cast<std::uint8_t>(ext & 0xFF)});
  }
}

void put_option(std::vector<std::uint8_t>& out, std::uint16_t& last_number,
                std::uint16_t number, std::span<const std::uint8_t> value) {
  std::size_t header_at = out.size();
  out.push_back(0);  // patched below
  std::uint8_t delta_nibble = 0;
  put_option_field(out, out.size(), number - last_number, delta_nibble);
  std::uint8_t length_nibble = 0;
  put_option_field(out, out.size(), static_cast<unsigned>(value.size()), length_nibble);
  out[header_at] = static_cast<std::uint8_t>(delta_nibble << 4 | length_nibble);
  out.insert(out.end(), value.begin(), value.end());
  last_number = number;
}

struct Reader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  bool done() const { return pos >= bytes.size(); }
  std::uint8_t peek() const { return bytes[pos]; }
  std::uint8_t take() {
    if (done()) fail(ErrorCode::Truncated, "unexpected end of message");
    return bytes[pos++];
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (pos + n > bytes.size()) fail(ErrorCode::Truncated, "unexpected end of message");
    auto out = bytes.subspan(pos, n);
    pos += n;
    return out;
  }
};

unsigned read_option_field(Reader& reader, std::uint8_t nibble, const char* what) {
  if (nibble < 13) return nibble;
  if (nibble == 13) return 13u + reader.take();
  if (nibble == 14) {
    unsigned hi = reader.take();
    unsigned lo = reader.take();
    return 269u + (hi << 8 | lo);
  }
  fail(ErrorCode::MalformedOption, std::string("reserved ") + what + " nibble 15");
}

}  // namespace

bool code_supported(std::uint8_t raw) {
  for (auto c : kSupportedCodes)
    if (c == raw) return true;
  return false;
}

bool is_request(Code code) { return code_class(code) == 0; }
int code_class(Code code) { return static_cast<std::uint8_t>(code) >> 5; }
int code_detail(Code code) { return static_cast<std::uint8_t>(code) & 0x1F; }

std::string code_string(Code code) {
  std::string s = std::to_string(code_class(code));
  int detail = code_detail(code);
  s += '.';
  s += static_cast<char>('0' + detail / 10);
  s += static_cast<char>('0' + detail % 10);
  return s;
}

std::vector<std::uint8_t> encode_message(const Message& message) {
  if (message.token.size() > kMaxTokenLength)
    fail(ErrorCode::OversizeToken, "token length " + std::to_string(message.token.size()));
  if (!code_supported(static_cast<std::uint8_t>(message.code)))
    fail(ErrorCode::UnsupportedCode, "code byte " +
                                         std::to_string(static_cast<std::uint8_t>(message.code)));

  std::vector<std::uint8_t> out;
  out.push_back(static_cast<std::uint8_t>(
      kVersion << 6 | static_cast<std::uint8_t>(message.type) << 4 | message.token.size()));
  out.push_back(static_cast<std::uint8_t>(message.code));
  out.push_back(static_cast<std::uint8_t>(message.message_id >> 8));
  out.push_back(static_cast<std::uint8_t>(message.message_id & 0xFF));
  out.insert(out.end(), message.token.begin(), message.token.end());

  std::uint16_t last_number = 0;
  for (const auto& segment : message.uri_path) {
    put_option(out, last_number, kOptionUriPath,
               {reinterpret_cast<const std::uint8_t*>(segment.data()), segment.size()});
  }
  if (message.content_format) {
    std::vector<std::uint8_t> value;  // minimal-length big-endian uint
    std::uint16_t cf = *message.content_format;
    if (cf > 0xFF) value.push_back(static_cast<std::uint8_t>(cf >> 8));
    if (cf > 0) value.push_back(static_cast<std::uint8_t>(cf & 0xFF));
    put_option(out, last_number, kOptionContentFormat, value);
  }

  if (!message.payload.empty()) {
    out.push_back(kPayloadMarker);
    out.insert(out.end(), message.payload.begin(), message.payload.end());
  }
  return out;
}

Message decode_message(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) fail(ErrorCode::Truncated, "header needs 4 bytes");

  Reader reader{bytes};
  std::uint8_t head = reader.take();
  std::uint8_t version = head >> 6;
  if (version != kVersion)
    fail(ErrorCode::UnsupportedVersion, "version " + std::to_string(version));
  std::uint8_t type = (head >> 4) & 0x3;
  if (type != 0 && type != 2)
    fail(ErrorCode::UnsupportedType, "type nibble " + std::to_string(type));
  std::uint8_t token_length = head & 0x0F;
  if (token_length > kMaxTokenLength)
    fail(ErrorCode::OversizeToken, "token length " + std::to_string(token_length));

  std::uint8_t code = reader.take();
  if (!code_supported(code))
    fail(ErrorCode::UnsupportedCode, "code byte " + std::to_string(code));

  Message message;
  message.type = static_cast<MsgType>(type);
  message.code = static_cast<Code>(code);
  std::uint8_t mid_hi = reader.take();
  std::uint8_t mid_lo = reader.take();
  message.message_id = static_cast<std::uint16_t>(mid_hi << 8 | mid_lo);
  auto token = reader.take(token_length);
  message.token.assign(token.begin(), token.end());

  std::uint16_t number = 0;
  while (!reader.done() && reader.peek() != kPayloadMarker) {
    std::uint8_t header = reader.take();
    if ((header >> 4) == 15 || (header & 0x0F) == 15)
      fail(ErrorCode::MalformedOption, "nibble 15 outside payload marker");
    unsigned delta = read_option_field(reader, header >> 4, "delta");
    unsigned length = read_option_field(reader, header & 0x0F, "length");
    number = static_cast<std::uint16_t>(number + delta);
    auto value = reader.take(length);
    switch (number) {
      case kOptionUriPath:
        message.uri_path.emplace_back(reinterpret_cast<const char*>(value.data()),
                                      value.size());
        break;
      case kOptionContentFormat: {
        if (message.content_format)
          fail(ErrorCode::MalformedOption, "repeated content-format");
        if (value.size() > 2) fail(ErrorCode::MalformedOption, "content-format too wide");
        std::uint16_t cf = 0;
        for (auto b : value) cf = static_cast<std::uint16_t>(cf << 8 | b);
        message.content_format = cf;
        break;
      }
      default:
        fail(ErrorCode::MalformedOption, "unsupported option " + std::to_string(number));
    }
  }

  if (!reader.done()) {
    reader.take();  // payload marker
    if (reader.done())
      fail(ErrorCode::MalformedOption, "payload marker with empty payload");
    auto payload = reader.take(bytes.size() - reader.pos);
    message.payload.assign(payload.begin(), payload.end());
  }
  return message;
}

std::string uri_string(const Message& message) {
  std::string out;
  for (std::size_t i = 0; i < message.uri_path.size(); ++i) {
    if (i) out += '/';
    out += message.uri_path[i];
  }
  return out;
}

}  // namespace vsn::wire
