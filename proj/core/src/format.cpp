#include "patflow/format.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace patflow {

std::string fmt6(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double round6(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(fmt6(v).c_str(), nullptr);
}

}  // namespace patflow
