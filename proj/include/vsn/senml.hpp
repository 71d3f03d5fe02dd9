#ifndef VSN_SENML_HPP
#define VSN_SENML_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vsn::wire {

/// One measurement: device identity, quantity, unit, value and time (seconds).
struct SenMLRecord {
  std::string base_name;
  std::string name;
  std::string unit;
  double value = 0.0;
  double time = 0.0;

  bool operator==(const SenMLRecord&) const = default;
};

struct MeasurementBatch {
  std::vector<SenMLRecord> records;

  bool operator==(const MeasurementBatch&) const = default;
};

/// UTF-8 JSON array, one object per record with fields "bn"/"n"/"u"/"v"/"t".
/// Numbers use shortest round-trip formatting, so decode(encode(b)) == b.
std::vector<std::uint8_t> encode_senml(const MeasurementBatch& batch);

MeasurementBatch decode_senml(std::span<const std::uint8_t> bytes);

/// Shortest round-trip decimal formatting, shared by codecs and reports.
std::string format_decimal(double value);

}  // namespace vsn::wire

#endif
