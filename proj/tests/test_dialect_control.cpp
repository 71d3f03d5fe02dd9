#include "vsn/control.hpp"
#include "vsn/dialect.hpp"
#include "vsn/errors.hpp"

#include "doctest.h"
#include "support/testutil.hpp"

using namespace vsn;
using namespace vsn::agent;

TEST_CASE("both dialects round trip reports exactly") {
  std::mt19937_64 rng(31415);
  for (Dialect dialect : {Dialect::KeyValueText, Dialect::CompactBinary}) {
    for (int i = 0; i < 300; ++i) {
      DialectReport report;
      report.task_id = "task;" + testutil::random_text(rng, 12);
      auto batch = testutil::random_batch(rng);
      report.records = batch.records;
      auto frame = dialect_encode(dialect, report);
      CHECK(dialect_frame_kind(dialect, frame) == FrameKind::Data);
      CHECK(dialect_decode(dialect, frame) == report);
    }
  }
}

TEST_CASE("text dialect survives separator characters in fields") {
  DialectReport report;
  report.task_id = "a=b;c\nd%e";
  report.records.push_back({"bn;=", "n\n", "u%", -12.5, 7.25});
  auto frame = dialect_encode(Dialect::KeyValueText, report);
  CHECK(dialect_decode(Dialect::KeyValueText, frame) == report);
}

TEST_CASE("malformed frames raise DialectError") {
  auto code_of = [](Dialect dialect, const std::vector<std::uint8_t>& frame) {
    try {
      dialect_decode(dialect, frame);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ConfigInvalid;
  };
  CHECK(code_of(Dialect::KeyValueText, {}) == ErrorCode::DialectError);
  std::string garbage = "xyz;task=1";
  CHECK(code_of(Dialect::KeyValueText, {garbage.begin(), garbage.end()}) ==
        ErrorCode::DialectError);
  std::string bad_value = "rpt;task=a\nbn=x;n=y;u=z;v=notanumber;t=0";
  CHECK(code_of(Dialect::KeyValueText, {bad_value.begin(), bad_value.end()}) ==
        ErrorCode::DialectError);
  CHECK(code_of(Dialect::CompactBinary, {0xD1, 0x00}) == ErrorCode::DialectError);
  CHECK(code_of(Dialect::CompactBinary, {0x42}) == ErrorCode::DialectError);
}

TEST_CASE("control documents ride either dialect unchanged") {
  ControlCommand command;
  command.verb = Verb::SetPriority;
  command.target = "s02";
  command.args = {{"task_id", "city-ambient"}, {"priority", 0}};
  auto document = encode_control(command);
  for (Dialect dialect : {Dialect::KeyValueText, Dialect::CompactBinary}) {
    auto frame = dialect_wrap_control(dialect, document);
    CHECK(dialect_frame_kind(dialect, frame) == FrameKind::Control);
    CHECK(dialect_unwrap_control(dialect, frame) == document);
  }
}

TEST_CASE("control commands round trip for every verb") {
  std::vector<ControlCommand> commands;
  commands.push_back({Verb::SetPriority, "s01", {{"task_id", "t"}, {"priority", 3}}});
  commands.push_back({Verb::SetPeriod, "s01", {{"task_id", "t"}, {"period_ms", 250.0}}});
  commands.push_back({Verb::RemoveTask, "s01", {{"task_id", "t"}}});
  commands.push_back({Verb::JoinOverlay, "g1", {{"overlay_id", "fire-contour-service"}}});
  nlohmann::json task = {{"task_id", "t"}, {"app_id", "city"}, {"quantity", "temperature"},
                         {"period_ms", 500.0}, {"priority", 0}};
  commands.push_back({Verb::DeployTask, "s01", {{"task", task}}});

  for (const auto& command : commands) {
    auto decoded = decode_control(encode_control(command));
    CHECK(decoded.verb == command.verb);
    CHECK(decoded.target == command.target);
    CHECK(decoded.args == command.args);
  }
}

TEST_CASE("malformed control documents are refused") {
  auto code_of = [](const std::string& text) {
    try {
      decode_control({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ConfigInvalid;
  };
  CHECK(code_of("not json at all") == ErrorCode::MalformedCommand);
  CHECK(code_of(R"({"verb":"set_priority"})") == ErrorCode::MalformedCommand);
  CHECK(code_of(R"({"verb":"dance","target":"s01","args":{}})") ==
        ErrorCode::MalformedCommand);
  CHECK(code_of(R"({"verb":"set_priority","target":"s01","args":{}})") ==
        ErrorCode::MalformedCommand);  // missing required args
  CHECK(code_of(R"({"verb":"set_priority","target":7,"args":{}})") ==
        ErrorCode::MalformedCommand);
}
