#pragma once

#include "enh/predictor.hpp"
#include "enh/schedule.hpp"
#include "enh/tensor.hpp"

namespace enh {

// Observation model: y = f * x + m, scalar gain f and per-pixel bias m.
struct DegradationParams {
  double f = 1.0;
  ImageTensor bias;

  static DegradationParams identity(int channels, int height, int width) {
    return DegradationParams{1.0, ImageTensor(channels, height, width, 0.0)};
  }
};

struct GuidanceConfig {
  double scale = 100000.0;        // weight on the fidelity gradient
  double lambda_exp = 0.001;      // weight on the exposure gradient
  double lambda_smooth = 0.001;   // bias-map smoothness weight (update only)
  double exposure_target = 0.4;   // desired block-mean intensity
  int region = 16;                // exposure block side
  double lr_f = 0.1;
  double lr_m = 0.1;
  double f_min = 1e-3;
  double f_max = 10.0;

  bool operator==(const GuidanceConfig&) const = default;
};

ImageTensor degrade(const ImageTensor& x, const DegradationParams& p);

// mean((a - b)^2) over all elements, and its gradient w.r.t. a.
double mse_loss(const ImageTensor& a, const ImageTensor& b);
ImageTensor mse_grad(const ImageTensor& a, const ImageTensor& b);

// Mean absolute deviation of block-mean intensity from `target`. Blocks are
// a non-overlapping region x region partition of the channel-mean plane;
// border blocks keep their true (smaller) pixel count.
double exposure_loss(const ImageTensor& x, double target, int region);
ImageTensor exposure_grad(const ImageTensor& x, double target, int region);

// Per channel, the squared sum of absolute forward differences (horizontal
// and vertical), summed over channels.
double smoothness_loss(const ImageTensor& m);
ImageTensor smoothness_grad(const ImageTensor& m);

struct GuidanceEval {
  ImageTensor grad;  // ascent direction for the mean shift, see below
  double mse = 0.0;
  double exposure = 0.0;
  double smoothness = 0.0;
};

// Gradient of the guidance objective with respect to the noisy state, with
// the noise estimate treated as constant, negated for use as a mean shift:
//   grad = -(1/sqrt(ab_t)) * (scale * f * d(mse)/d(x0) + lambda_exp * d(exposure)/d(x0))
// The smoothness term depends only on the bias map, so it contributes
// nothing here. Losses are reported as evaluated at x0_hat.
GuidanceEval guidance_eval(const ImageTensor& x0_hat, const ImageTensor& y,
                           const DegradationParams& p,
                           const GuidanceConfig& cfg, int t,
                           const NoiseSchedule& sched);

// Same objective differentiated numerically through the predictor (no
// constant-noise shortcut): central differences with step h on every
// element of x_t. Quadratic cost in the pixel count; small inputs only.
ImageTensor guidance_gradient_fd(const NoisePredictor& pred,
                                 const ImageTensor& x_t, const ImageTensor& y,
                                 const DegradationParams& p,
                                 const GuidanceConfig& cfg, int t,
                                 const NoiseSchedule& sched, double h = 1e-5);

// One gradient-descent step on (f, m) for
//   mse(f*x0 + m, y) + lambda_smooth * smoothness(m)
// with learning rates from cfg; f is clamped to [f_min, f_max].
void update_degradation(const ImageTensor& x0_hat, const ImageTensor& y,
                        DegradationParams& p, const GuidanceConfig& cfg);

}  // namespace enh
