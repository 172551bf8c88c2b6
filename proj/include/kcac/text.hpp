#pragma once

#include <charconv>
#include <string>

namespace kcac {

// Shortest decimal string that round-trips the exact double. Locale-free
// and deterministic, so emitted CSV bytes are stable across runs.
inline std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

}  // namespace kcac
