#include "vsn/errors.hpp"
#include "vsn/senml.hpp"

#include "doctest.h"
#include "support/testutil.hpp"

using namespace vsn;
using namespace vsn::wire;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& text) {
  return {text.begin(), text.end()};
}

std::string text_of(const std::vector<std::uint8_t>& bytes) {
  return {bytes.begin(), bytes.end()};
}

}  // namespace

TEST_CASE("single record round trips and uses the senml field names") {
  MeasurementBatch batch;
  batch.records.push_back({"s01", "temperature", "Cel", 20.0, 0.0});
  auto encoded = encode_senml(batch);
  CHECK(text_of(encoded) ==
        R"([{"bn":"s01","n":"temperature","t":0.0,"u":"Cel","v":20.0}])");
  CHECK(decode_senml(encoded) == batch);
}

TEST_CASE("zero value and zero time round trip exactly") {
  MeasurementBatch batch;
  batch.records.push_back({"n0", "temperature", "Cel", 0.0, 0.0});
  CHECK(decode_senml(encode_senml(batch)) == batch);
}

TEST_CASE("record order is preserved") {
  MeasurementBatch batch;
  for (int i = 0; i < 5; ++i)
    batch.records.push_back({"node-" + std::to_string(4 - i), "temperature", "Cel",
                             double(i), double(i) / 8});
  auto decoded = decode_senml(encode_senml(batch));
  REQUIRE(decoded.records.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(decoded.records[i] == batch.records[i]);
}

TEST_CASE("100 random batches round trip exactly") {
  std::mt19937_64 rng(998877);
  for (int i = 0; i < 100; ++i) {
    MeasurementBatch batch = testutil::random_batch(rng);
    CHECK(decode_senml(encode_senml(batch)) == batch);
  }
}

TEST_CASE("empty batch is rejected on both sides") {
  CHECK_THROWS_AS(encode_senml(MeasurementBatch{}), Error);
  try {
    decode_senml(bytes_of("[]"));
    FAIL("expected EmptyBatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyBatch);
  }
}

TEST_CASE("missing fields and malformed payloads are told apart") {
  auto code_of = [](const std::string& text) {
    try {
      decode_senml(bytes_of(text));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ConfigInvalid;  // sentinel
  };
  CHECK(code_of(R"([{"bn":"a","n":"t","u":"Cel","t":0.0}])") == ErrorCode::MissingField);
  CHECK(code_of(R"([{"n":"t","u":"Cel","v":1.0,"t":0.0}])") == ErrorCode::MissingField);
  CHECK(code_of("this is not json") == ErrorCode::MalformedJson);
  CHECK(code_of(R"({"bn":"a"})") == ErrorCode::MalformedJson);  // not an array
  CHECK(code_of(R"([{"bn":"a","n":"t","u":"Cel","v":"high","t":0.0}])") ==
        ErrorCode::MalformedJson);  // wrong type
  CHECK(code_of(R"([42])") == ErrorCode::MalformedJson);
}

TEST_CASE("format_decimal emits shortest round trip forms") {
  CHECK(format_decimal(19.62) == "19.62");
  CHECK(format_decimal(0.0) == "0");
  CHECK(format_decimal(-3.5) == "-3.5");
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    double v = testutil::random_value(rng);
    CHECK(std::stod(format_decimal(v)) == v);
  }
}
