#pragma once

#include <cstdint>
#include <vector>

#include "enh/tensor.hpp"

namespace enh {

struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> values;  // row-major, 0 or 1

  bool at(int y, int x) const {
    return values[static_cast<std::size_t>(y) * width + x] != 0;
  }
  std::size_t count() const;
};

// Threshold on channel-mean intensity: pixel is set iff mean > 0.5.
BinaryMask mask_from_image(const ImageTensor& img);

// Lightness order error. Lightness H is the per-pixel max over channels.
// With T(p, q) = 1 iff p >= q, over ordered pixel pairs (k, g):
//   LOE = (1/m) sum_k sum_g [ T(H(k),H(g)) != T(H'(k),H'(g)) ]
// Pairwise cost is quadratic, so images with more than sample_cap pixels
// are estimated on the deterministic strided subset idx_i = i*m/cap with
// both sums restricted to the subset.
double loe(const ImageTensor& original, const ImageTensor& enhanced,
           int sample_cap = 10000);

// Shannon entropy in bits of the 256-bin histogram of channel-mean
// intensity clamped to [0, 1] (bin = min(255, floor(v * 256))).
double entropy(const ImageTensor& img);

// Disk dilation of a mask: a pixel is set iff some set pixel lies within
// the disk {(dx, dy): dx^2 + dy^2 <= radius^2} around it.
BinaryMask dilate_disk(const BinaryMask& mask, int radius);

// Signal-to-noise ratio on channel-mean intensity. Signal statistics come
// from the mask; background is dilate_disk(mask, radius) minus the mask.
//   SNR = 10 log10(mean_signal^2 / var_background)   (population variance)
// Zero background variance returns the 99.0 saturation value. With
// linear_ratio the undecibeled mean_signal^2 / var_background is returned.
double snr_dilated(const ImageTensor& img, const BinaryMask& signal,
                   int radius, bool linear_ratio = false);

struct OverlapMetrics {
  double pa = 0.0;    // pixel accuracy
  double iou = 0.0;   // intersection over union, 1 when both masks empty
  double dice = 0.0;  // 2|I|/(|A|+|B|), 1 when both masks empty
};

OverlapMetrics overlap_metrics(const BinaryMask& pred, const BinaryMask& gt);

}  // namespace enh
