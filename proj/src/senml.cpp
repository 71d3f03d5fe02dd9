#include "vsn/senml.hpp"

#include <charconv>

#include "vsn/errors.hpp"

#include "json.hpp"

namespace vsn::wire {

using nlohmann::json;

std::string format_decimal(double value) {
  char buf[32];
  auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

std::vector<std::uint8_t> encode_senml(const MeasurementBatch& batch) {
  if (batch.records.empty()) fail(ErrorCode::EmptyBatch, "batch has no records");
  json array = json::array();
  for (const auto& record : batch.records) {
    array.push_back({{"bn", record.base_name},
                     {"n", record.name},
                     {"u", record.unit},
                     {"v", record.value},
                     {"t", record.time}});
  }
  std::string text = array.dump();
  return {text.begin(), text.end()};
}

MeasurementBatch decode_senml(std::span<const std::uint8_t> bytes) {
  json parsed = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (parsed.is_discarded() || !parsed.is_array())
    fail(ErrorCode::MalformedJson, "payload is not a JSON array");
  if (parsed.empty()) fail(ErrorCode::EmptyBatch, "empty JSON array");

  MeasurementBatch batch;
  for (const auto& item : parsed) {
    if (!item.is_object()) fail(ErrorCode::MalformedJson, "record is not an object");
    SenMLRecord record;
    for (const char* field : {"bn", "n", "u", "v", "t"})
      if (!item.contains(field))
        fail(ErrorCode::MissingField, std::string("record missing \"") + field + "\"");
    if (!item["bn"].is_string() || !item["n"].is_string() || !item["u"].is_string() ||
        !item["v"].is_number() || !item["t"].is_number())
      fail(ErrorCode::MalformedJson, "record field has wrong type");
    record.base_name = item["bn"].get<std::string>();
    record.name = item["n"].get<std::string>();
    record.unit = item["u"].get<std::string>();
    record.value = item["v"].get<double>();
    record.time = item["t"].get<double>();
    batch.records.push_back(std::move(record));
  }
  return batch;
}

}  // namespace vsn::wire
