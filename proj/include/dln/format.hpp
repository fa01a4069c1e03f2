#pragma once
/// @file format.hpp
/// Tiny deterministic number formatting helpers (17 significant digits,
/// enough to round-trip any double exactly through text).

#include <cstdio>
#include <string>

namespace dln {

/// Formats a double with 17 significant digits (%.17g).
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace dln
