#ifndef VSN_CHANNEL_HPP
#define VSN_CHANNEL_HPP

namespace vsn {

/// The five architecture interfaces. Every message in a run is tagged with
/// exactly one of these; Di carries only data payloads, Ci only control.
enum class ChannelKind {
  Di,   // standardized data interface: agent -> application
  Ci,   // standardized control interface: application/overlay -> agent
  PDi,  // proprietary data interface: node runtime -> agent (local)
  PCi,  // proprietary control interface: agent -> node runtime (local)
  Gi,   // gates-to-overlay hop between a constrained sensor and its gateway
};

constexpr const char* to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::Di: return "Di";
    case ChannelKind::Ci: return "Ci";
    case ChannelKind::PDi: return "PDi";
    case ChannelKind::PCi: return "PCi";
    case ChannelKind::Gi: return "Gi";
  }
  return "?";
}

}  // namespace vsn

#endif
