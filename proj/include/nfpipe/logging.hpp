#pragma once

#include <string>

namespace nfpipe::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

/// Threshold is read once from NF_PIPELINE_LOG (error|warn|info|debug).
/// Defaults to warn.
Level threshold();

void message(Level level, const std::string& text);

inline void error(const std::string& text) { message(Level::error, text); }
inline void warn(const std::string& text) { message(Level::warn, text); }
inline void info(const std::string& text) { message(Level::info, text); }
inline void debug(const std::string& text) { message(Level::debug, text); }

}  // namespace nfpipe::log
