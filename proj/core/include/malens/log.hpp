#pragma once

#include <functional>
#include <string_view>

namespace malens::log {

enum class Level { Debug, Info, Warning, Error };

using Sink = std::function<void(Level, std::string_view)>;

/// Replaces the process-wide sink (default: stderr, Info and above).
/// Returns the previous sink.
Sink set_sink(Sink sink);

void write(Level level, std::string_view message);
inline void info(std::string_view message) { write(Level::Info, message); }
inline void warn(std::string_view message) { write(Level::Warning, message); }
inline void error(std::string_view message) { write(Level::Error, message); }

}  // namespace malens::log
