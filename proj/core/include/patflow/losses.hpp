#pragma once

#include <span>
#include <vector>

#include "patflow/image.hpp"
#include "patflow/supervision.hpp"

namespace patflow {

struct WarpResult {
  GrayImage image;
  Mask valid;
  std::size_t valid_count = 0;
};

/// out(x,y) = P(x - D(x,y), y). Pixels with invalid disparity or an
/// out-of-bounds source are zero and flagged invalid.
WarpResult warp(const GrayImage& pattern, const DisparityMap& disp);

/// A loss over a window of disparity maps with one gradient image per map.
struct WindowLoss {
  double value = 0.0;
  std::vector<Image<double>> gradients;
  std::size_t count = 0;  ///< valid pixels (photometric) or used points (disparity)
};

/// Sum over the window of the mean absolute residual |I - warp(P, D)| over
/// valid pixels. Frames with no valid pixel contribute 0.
WindowLoss loss_photometric(std::span<const GrayImage> frames, std::span<const DisparityMap> disps,
                            const GrayImage& pattern);

/// Confidence-weighted mean of |D(c) - d_pgt| over all supervision points,
/// D(c) sampled bilinearly. disps[k] holds frame supervision.first_frame + k.
/// With `use_weights` false every point weighs 1.
WindowLoss loss_disparity(std::span<const DisparityMap> disps, const SparseSupervision& supervision,
                          bool use_weights = true);

struct FieldLoss {
  double value = 0.0;
  Image<double> gradient;
};

/// Anisotropic total variation, mean over pixels of |dD/dx| + |dD/dy|
/// (forward differences).
FieldLoss smoothness_tv(const Image<double>& field);

}  // namespace patflow
