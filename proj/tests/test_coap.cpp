#include <fstream>

#include "vsn/coap.hpp"
#include "vsn/errors.hpp"

#include "doctest.h"
#include "json.hpp"
#include "support/refcoap.hpp"
#include "support/testutil.hpp"

using namespace vsn;
using namespace vsn::wire;
using testutil::from_hex;
using testutil::to_hex;

namespace {

Message message_from_golden(const nlohmann::json& item) {
  Message m;
  m.type = item["type"] == "confirmable" ? MsgType::Confirmable : MsgType::Acknowledgement;
  std::string code = item["code"].get<std::string>();
  int cls = code[0] - '0';
  int detail = std::stoi(code.substr(2));
  m.code = static_cast<Code>(cls << 5 | detail);
  m.message_id = item["message_id"].get<std::uint16_t>();
  m.token = from_hex(item["token_hex"].get<std::string>());
  for (const auto& segment : item["uri_path"]) m.uri_path.push_back(segment.get<std::string>());
  if (!item["content_format"].is_null())
    m.content_format = item["content_format"].get<std::uint16_t>();
  m.payload = from_hex(item["payload_hex"].get<std::string>());
  return m;
}

void check_against_reference(const Message& m, const std::vector<std::uint8_t>& bytes) {
  refcoap::Frame frame = refcoap::parse(bytes);
  CHECK(frame.version == 1);
  CHECK(frame.type == static_cast<unsigned>(m.type));
  CHECK(frame.code_class == static_cast<unsigned>(code_class(m.code)));
  CHECK(frame.code_detail == static_cast<unsigned>(code_detail(m.code)));
  CHECK(frame.message_id == m.message_id);
  CHECK(frame.token == m.token);
  CHECK(frame.payload == m.payload);

  std::vector<std::string> uri;
  std::optional<std::uint16_t> cf;
  unsigned last_number = 0;
  for (const auto& option : frame.options) {
    CHECK(option.number >= last_number);  // ascending numbers on the wire
    last_number = option.number;
    if (option.number == 11)
      uri.emplace_back(option.value.begin(), option.value.end());
    if (option.number == 12) {
      std::uint16_t value = 0;
      for (auto b : option.value) value = static_cast<std::uint16_t>(value << 8 | b);
      cf = value;
    }
  }
  CHECK(uri == m.uri_path);
  CHECK(cf == m.content_format);
}

}  // namespace

TEST_CASE("plain GET encodes to the four byte header") {
  Message m;
  m.code = Code::Get;
  m.message_id = 0x1234;
  CHECK(to_hex(encode_message(m)) == "40011234");
}

TEST_CASE("2.01 Created carries code byte 0x41") {
  Message m;
  m.type = MsgType::Acknowledgement;
  m.code = Code::Created;
  m.message_id = 1;
  CHECK(encode_message(m)[1] == 0x41);
}

TEST_CASE("golden vectors decode and re-encode bit exactly") {
  std::ifstream in(std::string(VSN_SOURCE_DIR) + "/tests/data/coap_golden.json");
  REQUIRE(in.good());
  nlohmann::json golden = nlohmann::json::parse(in);
  REQUIRE(golden.size() >= 4);
  for (const auto& item : golden) {
    INFO("vector: " << item["name"].get<std::string>());
    Message expected = message_from_golden(item);
    auto bytes = from_hex(item["hex"].get<std::string>());
    CHECK(decode_message(bytes) == expected);
    CHECK(to_hex(encode_message(expected)) == item["hex"].get<std::string>());
    check_against_reference(expected, bytes);
  }
}

TEST_CASE("decode of 40011234 yields GET with message id 0x1234") {
  Message m = decode_message(from_hex("40011234"));
  CHECK(m.code == Code::Get);
  CHECK(m.message_id == 0x1234);
  CHECK(m.type == MsgType::Confirmable);
  CHECK(m.token.empty());
  CHECK(m.uri_path.empty());
  CHECK(m.payload.empty());
}

TEST_CASE("round trip holds over 1000 seeded random messages") {
  std::mt19937_64 rng(20151234);
  for (int i = 0; i < 1000; ++i) {
    Message m = testutil::random_message(rng);
    auto bytes = encode_message(m);
    CHECK(decode_message(bytes) == m);
    check_against_reference(m, bytes);
  }
}

TEST_CASE("empty input is rejected as truncated") {
  CHECK_THROWS_AS(decode_message({}), Error);
  try {
    decode_message({});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Truncated);
  }
}

TEST_CASE("decode error taxonomy") {
  auto code_of = [](const std::string& hex) {
    try {
      decode_message(from_hex(hex));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ConfigInvalid;  // sentinel: no error raised
  };
  CHECK(code_of("4001") == ErrorCode::Truncated);          // header cut short
  CHECK(code_of("80011234") == ErrorCode::UnsupportedVersion);
  CHECK(code_of("50011234") == ErrorCode::UnsupportedType);  // NON not in subset
  CHECK(code_of("40051234") == ErrorCode::UnsupportedCode);
  CHECK(code_of("49011234aabb") == ErrorCode::OversizeToken);
  CHECK(code_of("42011234aa") == ErrorCode::Truncated);    // token cut short
  CHECK(code_of("40011234ff") == ErrorCode::MalformedOption);  // marker, no payload
  CHECK(code_of("400112343141") == ErrorCode::MalformedOption);  // option number 3
  CHECK(code_of("40011234b56162") == ErrorCode::Truncated);  // option value cut short
  CHECK(code_of("40011234d0") == ErrorCode::Truncated);      // missing ext delta byte
}

TEST_CASE("token bounds are enforced on encode") {
  Message m;
  m.code = Code::Get;
  m.token.assign(9, 0xAB);
  CHECK_THROWS_AS(encode_message(m), Error);
  try {
    encode_message(m);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OversizeToken);
  }
}

TEST_CASE("option numbers are non-decreasing for long paths") {
  Message m;
  m.code = Code::Post;
  m.message_id = 7;
  m.uri_path = {"agents", "agent-with-a-long-name", "nodes", "s01", "di"};
  m.content_format = kContentFormatSenmlJson;
  m.payload = {0x5B, 0x5D};
  auto bytes = encode_message(m);
  CHECK(decode_message(bytes) == m);
  check_against_reference(m, bytes);
}
