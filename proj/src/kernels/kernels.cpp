#include "nfpipe/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "nfpipe/logging.hpp"

namespace nfpipe::kernels {

#if defined(NFPIPE_HAVE_AVX2)
const Table* avx2_table_impl();
#endif

const Table* avx2_table() {
#if defined(NFPIPE_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2")) return avx2_table_impl();
#endif
  return nullptr;
}

namespace {

std::atomic<int> g_forced_level{-1};  // -1 = no override

Level env_level() {
  const char* env = std::getenv("NF_PIPELINE_SIMD");
  if (env == nullptr || std::strcmp(env, "auto") == 0) return Level::auto_detect;
  if (std::strcmp(env, "scalar") == 0) return Level::scalar;
  if (std::strcmp(env, "avx2") == 0) return Level::avx2;
  log::warn(std::string("unknown NF_PIPELINE_SIMD value '") + env + "', using auto");
  return Level::auto_detect;
}

const Table& select(Level level) {
  if (level == Level::auto_detect) {
    if (const Table* t = avx2_table()) return *t;
    return scalar_table();
  }
  if (level == Level::avx2) {
    if (const Table* t = avx2_table()) return *t;
    log::warn("AVX2 kernels requested but unavailable; using scalar");
    return scalar_table();
  }
  return scalar_table();
}

}  // namespace

void set_level(Level level) { g_forced_level.store(static_cast<int>(level)); }

const Table& active() {
  const int forced = g_forced_level.load();
  if (forced >= 0) return select(static_cast<Level>(forced));
  static const Table& env_selected = select(env_level());
  return env_selected;
}

}  // namespace nfpipe::kernels
