#pragma once

#include <charconv>
#include <ostream>
#include <string>

namespace ddns {

/// Shortest round-trip decimal form of v.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_double(std::ostream& os, double v) { os << format_double(v); }

}  // namespace ddns
