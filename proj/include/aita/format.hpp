#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace aita {

// Shortest round-trip decimal form, independent of the global locale.
inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

// Fixed precision, also locale-independent.
inline std::string format_fixed(double v, int precision) {
  if (!std::isfinite(v)) return format_number(v);
  char buf[128];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  return std::string(buf, end);
}

}  // namespace aita
