#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace dynidx {

// 32-bit FNV-1a; stable across platforms, used for ids and index names.
inline std::uint32_t fnv1a32(std::string_view data) noexcept {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : data) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

inline std::string hex8(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

}  // namespace dynidx
