#include "nfpipe/logging.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace nfpipe::log {

static Level parse_env() {
  const char* env = std::getenv("NF_PIPELINE_LOG");
  if (env == nullptr) return Level::warn;
  if (std::strcmp(env, "error") == 0) return Level::error;
  if (std::strcmp(env, "warn") == 0) return Level::warn;
  if (std::strcmp(env, "info") == 0) return Level::info;
  if (std::strcmp(env, "debug") == 0) return Level::debug;
  return Level::warn;
}

Level threshold() {
  static const Level level = parse_env();
  return level;
}

void message(Level level, const std::string& text) {
  if (level > threshold()) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[nfpipe:%s] %s\n", names[static_cast<int>(level)],
               text.c_str());
}

}  // namespace nfpipe::log
