#pragma once

#include <string>

namespace patflow {

/// Six significant digits, the precision used for every textual output.
std::string fmt6(double v);

/// `v` rounded to six significant digits, for JSON emission.
double round6(double v);

}  // namespace patflow
