#ifndef VSN_LOGGING_HPP
#define VSN_LOGGING_HPP

#include <sstream>
#include <string>

namespace vsn::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3, Trace = 4 };

// Threshold comes from the VSN_LOG environment variable (error|warn|info|debug|trace),
// default warn. Output goes to stderr only, never into run artifacts.
Level threshold();
bool enabled(Level level);
void write(Level level, const std::string& line);

}  // namespace vsn::log

#define VSN_LOG_AT(level, expr)                          \
  do {                                                   \
    if (::vsn::log::enabled(level)) {                    \
      std::ostringstream vsn_log_os_;                    \
      vsn_log_os_ << expr;                               \
      ::vsn::log::write(level, vsn_log_os_.str());       \
    }                                                    \
  } while (false)

#define VSN_WARN(expr) VSN_LOG_AT(::vsn::log::Level::Warn, expr)
#define VSN_INFO(expr) VSN_LOG_AT(::vsn::log::Level::Info, expr)
#define VSN_DEBUG(expr) VSN_LOG_AT(::vsn::log::Level::Debug, expr)

#endif
