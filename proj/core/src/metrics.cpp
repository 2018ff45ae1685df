#include "patflow/metrics.hpp"

#include <cmath>

#include "patflow/errors.hpp"

namespace patflow {

MetricsRow compute_metrics(const DisparityMap& pred, const DisparityMap& gt, int frame) {
  if (!pred.values.same_shape(gt.values)) throw DataError("prediction and ground truth differ in shape");
  MetricsRow row;
  row.frame = frame;
  std::size_t over1 = 0, over2 = 0, over5 = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < gt.values.size(); ++i) {
    if (!pred.valid[i] || !gt.valid[i]) continue;
    const double e = std::abs(pred.values[i] - gt.values[i]);
    sum += e;
    over1 += e > 1.0;
    over2 += e > 2.0;
    over5 += e > 5.0;
    ++row.pixels;
  }
  if (row.pixels == 0) return row;
  const double n = static_cast<double>(row.pixels);
  row.o1 = 100.0 * static_cast<double>(over1) / n;
  row.o2 = 100.0 * static_cast<double>(over2) / n;
  row.o5 = 100.0 * static_cast<double>(over5) / n;
  row.avg_l1 = sum / n;
  return row;
}

}  // namespace patflow
