#ifndef VSN_DIALECT_HPP
#define VSN_DIALECT_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vsn/senml.hpp"

namespace vsn::agent {

/// Proprietary node-native formats the agent translates at the PDi/PCi
/// boundary. Two real dialects ship so the mapping layer is testable.
enum class Dialect { KeyValueText, CompactBinary };

const char* to_string(Dialect dialect);
Dialect dialect_from_string(const std::string& s);

/// One proprietary report: the emitting task plus its records.
struct DialectReport {
  std::string task_id;
  std::vector<wire::SenMLRecord> records;

  bool operator==(const DialectReport&) const = default;
};

std::vector<std::uint8_t> dialect_encode(Dialect dialect, const DialectReport& report);
DialectReport dialect_decode(Dialect dialect, std::span<const std::uint8_t> bytes);  // DialectError

/// Control documents ride the proprietary link framed by the dialect; the
/// document itself stays the compact JSON used on Ci/PCi.
std::vector<std::uint8_t> dialect_wrap_control(Dialect dialect,
                                               std::span<const std::uint8_t> document);
std::vector<std::uint8_t> dialect_unwrap_control(Dialect dialect,
                                                 std::span<const std::uint8_t> frame);

enum class FrameKind { Data, Control };
FrameKind dialect_frame_kind(Dialect dialect, std::span<const std::uint8_t> frame);

}  // namespace vsn::agent

#endif
