#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace taskweave {

/// File-open and parse failures, as opposed to semantic validation errors.
/// The CLI maps these to a distinct exit code.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::uint64_t align_up(std::uint64_t v, std::uint64_t a) {
  return (v + a - 1) / a * a;
}

// splitmix64: cheap deterministic stream used for synthetic input data.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic float in [-1, 1), exact across platforms (derived from integer bits).
inline float unit_float(std::uint64_t seed, std::uint64_t idx) {
  const std::uint64_t h = splitmix64(seed * 0x100000001b3ULL + idx);
  return static_cast<float>(static_cast<std::int32_t>(h >> 32)) /
         2147483648.0f;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t v);

enum class LogLevel { None = 0, Error = 1, Warn = 2, Info = 3, Debug = 4 };

// Parsed once from TASKWEAVE_LOG (error|warn|info|debug).
LogLevel log_level();

inline bool log_enabled(LogLevel lvl) { return log_level() >= lvl; }

#define TW_LOG(lvl, msg)                                                       \
  do {                                                                         \
    if (::taskweave::log_enabled(lvl)) {                                       \
      std::cerr << "[taskweave] " << msg << "\n";                              \
    }                                                                          \
  } while (0)

#define TW_INFO(msg) TW_LOG(::taskweave::LogLevel::Info, msg)
#define TW_WARN(msg) TW_LOG(::taskweave::LogLevel::Warn, msg)
#define TW_DEBUG(msg) TW_LOG(::taskweave::LogLevel::Debug, msg)

}  // namespace taskweave
