#pragma once

#include <cstddef>

#include "patflow/image.hpp"

namespace patflow {

/// Per-frame disparity error statistics over pixels valid in both maps.
struct MetricsRow {
  int frame = 0;
  double o1 = 0.0;      ///< % of pixels with |error| > 1 px
  double o2 = 0.0;      ///< % with |error| > 2 px
  double o5 = 0.0;      ///< % with |error| > 5 px
  double avg_l1 = 0.0;  ///< mean |error|, px
  std::size_t pixels = 0;
};

/// Throws DataError when the shapes differ. With no common valid pixel all
/// statistics are zero and `pixels` is 0.
MetricsRow compute_metrics(const DisparityMap& pred, const DisparityMap& gt, int frame = 0);

}  // namespace patflow
