#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace kahlerlab {

// Round-trippable, locale-independent number formatting for CSV output.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace kahlerlab
