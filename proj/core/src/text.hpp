#pragma once

#include <cstdio>
#include <string>

namespace rcap::detail {

// Round-trip decimal form used in every CSV we write.
inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace rcap::detail
