#include "vsn/dialect.hpp"

#include <bit>
#include <charconv>

#include "vsn/errors.hpp"

namespace vsn::agent {

namespace {

constexpr std::uint8_t kBinaryDataTag = 0xD1;
constexpr std::uint8_t kBinaryControlTag = 0xD2;

std::string format_double(double v) {
  char buf[32];
  auto result = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, result.ptr);
}

double parse_double(const std::string& s) {
  double v = 0;
  auto result = std::from_chars(s.data(), s.data() + s.size(), v);
  if (result.ec != std::errc() || result.ptr != s.data() + s.size())
    fail(ErrorCode::DialectError, "bad numeric field \"" + s + "\"");
  return v;
}

// key=value text needs ';', '=', newlines and '%' escaped inside values.
std::string pct_encode(const std::string& s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (c == '%' || c == ';' || c == '=' || c == '\n' || c == '\r') {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 0xF];
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

std::string pct_decode(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '%') {
      out += s[i];
      continue;
    }
    if (i + 2 >= s.size()) fail(ErrorCode::DialectError, "truncated escape");
    int hi = hex_value(s[i + 1]);
    int lo = hex_value(s[i + 2]);
    if (hi < 0 || lo < 0) fail(ErrorCode::DialectError, "bad escape in \"" + s + "\"");
    out += static_cast<char>(hi << 4 | lo);
    i += 2;
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t end = s.find(sep, start);
    if (end == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
}

std::string field_of(const std::string& pair, const std::string& key) {
  if (pair.size() < key.size() + 1 || pair.compare(0, key.size(), key) != 0 ||
      pair[key.size()] != '=')
    fail(ErrorCode::DialectError, "expected \"" + key + "=...\", got \"" + pair + "\"");
  return pair.substr(key.size() + 1);
}

// ---- key=value text ----

std::vector<std::uint8_t> kv_encode(const DialectReport& report) {
  std::string text = "rpt;task=" + pct_encode(report.task_id);
  for (const auto& r : report.records) {
    text += "\nbn=" + pct_encode(r.base_name) + ";n=" + pct_encode(r.name) +
            ";u=" + pct_encode(r.unit) + ";v=" + format_double(r.value) +
            ";t=" + format_double(r.time);
  }
  return {text.begin(), text.end()};
}

DialectReport kv_decode(std::span<const std::uint8_t> bytes) {
  std::string text(bytes.begin(), bytes.end());
  auto lines = split(text, '\n');
  auto head = split(lines[0], ';');
  if (head.size() != 2 || head[0] != "rpt")
    fail(ErrorCode::DialectError, "bad report header \"" + lines[0] + "\"");
  DialectReport report;
  report.task_id = pct_decode(field_of(head[1], "task"));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto fields = split(lines[i], ';');
    if (fields.size() != 5) fail(ErrorCode::DialectError, "bad record line");
    wire::SenMLRecord r;
    r.base_name = pct_decode(field_of(fields[0], "bn"));
    r.name = pct_decode(field_of(fields[1], "n"));
    r.unit = pct_decode(field_of(fields[2], "u"));
    r.value = parse_double(field_of(fields[3], "v"));
    r.time = parse_double(field_of(fields[4], "t"));
    report.records.push_back(std::move(r));
  }
  return report;
}

// ---- compact binary ----

struct Writer {
  std::vector<std::uint8_t> out;

  void u8(std::uint8_t v) { out.push_back(v); }
  void u16(std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  }
  void u32(std::uint32_t v) {
    u16(static_cast<std::uint16_t>(v >> 16));
    u16(static_cast<std::uint16_t>(v & 0xFFFF));
  }
  void f64(double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    u32(static_cast<std::uint32_t>(bits >> 32));
    u32(static_cast<std::uint32_t>(bits & 0xFFFFFFFF));
  }
  void str(const std::string& s) {
    if (s.size() > 0xFFFF) fail(ErrorCode::DialectError, "string too long");
    u16(static_cast<std::uint16_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
};

struct BinReader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  std::uint8_t u8() {
    if (pos >= bytes.size()) fail(ErrorCode::DialectError, "truncated binary frame");
    return bytes[pos++];
  }
  std::uint16_t u16() {
    std::uint16_t hi = u8();
    return static_cast<std::uint16_t>(hi << 8 | u8());
  }
  std::uint32_t u32() {
    std::uint32_t hi = u16();
    return hi << 16 | u16();
  }
  double f64() {
    std::uint64_t hi = u32();
    return std::bit_cast<double>(hi << 32 | u32());
  }
  std::string str() {
    std::uint16_t n = u16();
    if (pos + n > bytes.size()) fail(ErrorCode::DialectError, "truncated binary string");
    std::string s(reinterpret_cast<const char*>(bytes.data()) + pos, n);
    pos += n;
    return s;
  }
};

std::vector<std::uint8_t> bin_encode(const DialectReport& report) {
  Writer w;
  w.u8(kBinaryDataTag);
  w.str(report.task_id);
  w.u16(static_cast<std::uint16_t>(report.records.size()));
  for (const auto& r : report.records) {
    w.str(r.base_name);
    w.str(r.name);
    w.str(r.unit);
    w.f64(r.value);
    w.f64(r.time);
  }
  return std::move(w.out);
}

DialectReport bin_decode(std::span<const std::uint8_t> bytes) {
  BinReader reader{bytes};
  if (reader.u8() != kBinaryDataTag) fail(ErrorCode::DialectError, "bad binary data tag");
  DialectReport report;
  report.task_id = reader.str();
  std::uint16_t count = reader.u16();
  for (std::uint16_t i = 0; i < count; ++i) {
    wire::SenMLRecord r;
    r.base_name = reader.str();
    r.name = reader.str();
    r.unit = reader.str();
    r.value = reader.f64();
    r.time = reader.f64();
    report.records.push_back(std::move(r));
  }
  if (reader.pos != bytes.size()) fail(ErrorCode::DialectError, "trailing bytes");
  return report;
}

}  // namespace

const char* to_string(Dialect dialect) {
  switch (dialect) {
    case Dialect::KeyValueText: return "keyvalue";
    case Dialect::CompactBinary: return "binary";
  }
  return "?";
}

Dialect dialect_from_string(const std::string& s) {
  if (s == "keyvalue") return Dialect::KeyValueText;
  if (s == "binary") return Dialect::CompactBinary;
  fail(ErrorCode::ConfigInvalid, "unknown dialect \"" + s + "\"");
}

std::vector<std::uint8_t> dialect_encode(Dialect dialect, const DialectReport& report) {
  return dialect == Dialect::KeyValueText ? kv_encode(report) : bin_encode(report);
}

DialectReport dialect_decode(Dialect dialect, std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) fail(ErrorCode::DialectError, "empty frame");
  return dialect == Dialect::KeyValueText ? kv_decode(bytes) : bin_decode(bytes);
}

std::vector<std::uint8_t> dialect_wrap_control(Dialect dialect,
                                               std::span<const std::uint8_t> document) {
  if (dialect == Dialect::KeyValueText) {
    std::string text =
        "ctl;doc=" + pct_encode(std::string(document.begin(), document.end()));
    return {text.begin(), text.end()};
  }
  Writer w;
  w.u8(kBinaryControlTag);
  w.u32(static_cast<std::uint32_t>(document.size()));
  w.out.insert(w.out.end(), document.begin(), document.end());
  return std::move(w.out);
}

std::vector<std::uint8_t> dialect_unwrap_control(Dialect dialect,
                                                 std::span<const std::uint8_t> frame) {
  if (frame.empty()) fail(ErrorCode::DialectError, "empty frame");
  if (dialect == Dialect::KeyValueText) {
    std::string text(frame.begin(), frame.end());
    auto fields = split(text, ';');
    if (fields.size() != 2 || fields[0] != "ctl")
      fail(ErrorCode::DialectError, "bad control header");
    std::string doc = pct_decode(field_of(fields[1], "doc"));
    return {doc.begin(), doc.end()};
  }
  BinReader reader{frame};
  if (reader.u8() != kBinaryControlTag) fail(ErrorCode::DialectError, "bad control tag");
  std::uint32_t n = reader.u32();
  if (reader.pos + n != frame.size()) fail(ErrorCode::DialectError, "bad control length");
  return {frame.begin() + static_cast<std::ptrdiff_t>(reader.pos), frame.end()};
}

FrameKind dialect_frame_kind(Dialect dialect, std::span<const std::uint8_t> frame) {
  if (frame.empty()) fail(ErrorCode::DialectError, "empty frame");
  if (dialect == Dialect::KeyValueText) {
    std::string head(frame.begin(), frame.begin() + std::min<std::size_t>(4, frame.size()));
    if (head.rfind("rpt;", 0) == 0) return FrameKind::Data;
    if (head.rfind("ctl;", 0) == 0) return FrameKind::Control;
    fail(ErrorCode::DialectError, "unknown text frame \"" + head + "\"");
  }
  if (frame[0] == kBinaryDataTag) return FrameKind::Data;
  if (frame[0] == kBinaryControlTag) return FrameKind::Control;
  fail(ErrorCode::DialectError, "unknown binary tag");
}

}  // namespace vsn::agent
