#pragma once

#include <string>
#include <vector>

#include "enh/guidance.hpp"
#include "enh/predictor.hpp"
#include "enh/schedule.hpp"
#include "enh/tensor.hpp"

namespace enh {

struct SampleConfig {
  GuidanceConfig guidance;
  int patch = 256;
  int stride = 128;
  int workers = 1;
  bool record_trace = false;
  bool clamp_x0 = false;        // clamp the clean estimate to [-1, 1]
  bool update_params = true;    // fit (f, bias) during sampling
  bool random_init = false;     // f ~ U[0.5, 1.5], bias ~ N(0, 0.1^2)
  bool fd_gradient = false;     // numeric gradient through the predictor
  double fd_step = 1e-5;

  bool operator==(const SampleConfig&) const = default;
};

struct TraceRow {
  int step = 0;  // 1-based, counts executed reverse steps
  int t = 0;
  double mse = 0.0;
  double exposure = 0.0;
  double smoothness = 0.0;
  double f = 0.0;  // gain after this step's update
};

struct EnhanceResult {
  ImageTensor enhanced;
  DegradationParams fitted;
  std::vector<TraceRow> trace;
};

// Square tiles covering height x width, row-major. Along each axis the
// offsets are 0, stride, 2*stride, ... while offset + patch < extent, plus a
// final tile snapped to extent - patch. Requires patch <= extent and
// 1 <= stride <= patch.
std::vector<PatchRect> build_patch_grid(int height, int width, int patch,
                                        int stride);

// Per-pixel average of per-tile noise estimates. Every pixel must be
// covered by at least one tile.
ImageTensor aggregate_patch_noise(const std::vector<ImageTensor>& parts,
                                  const std::vector<PatchRect>& rects,
                                  int channels, int height, int width);

// Plain ancestral reverse process from pure noise, no guidance. Consumes the
// stream as: initial state, then one noise image per step except the last.
ImageTensor sample_unconditional(const NoisePredictor& pred,
                                 const NoiseSchedule& sched, int channels,
                                 int height, int width, RandomSource& rng);

// Guided reverse process on a whole image. Per step: estimate noise, form
// the clean estimate, shift the posterior mean by var * guidance gradient,
// take one descent step on the degradation fit, then sample the next state.
// `init` overrides the starting degradation (and suppresses random_init);
// identity otherwise. Stream order matches sample_unconditional with the
// random parameter draws (if any) in front.
EnhanceResult enhance(const ImageTensor& y, const NoisePredictor& pred,
                      const NoiseSchedule& sched, const SampleConfig& cfg,
                      RandomSource& rng,
                      const DegradationParams* init = nullptr);

// Same process with the noise estimate assembled from overlapping tiles
// (averaged where they overlap). Guidance, the degradation fit, and the
// transition noise stay global, so one parameter update happens per step.
// A single tile covering the image reproduces enhance() exactly.
EnhanceResult enhance_patched(const ImageTensor& y, const NoisePredictor& pred,
                              const NoiseSchedule& sched,
                              const SampleConfig& cfg, RandomSource& rng,
                              const DegradationParams* init = nullptr);

// Arbitrary-size entry point: pads by edge replication to multiples of 16,
// runs whole-image when the padded size fits one tile and the tiled path
// otherwise, then crops the result (and fitted bias map) back.
EnhanceResult enhance_any_size(const ImageTensor& y, const NoisePredictor& pred,
                               const NoiseSchedule& sched,
                               const SampleConfig& cfg, RandomSource& rng);

void write_trace_csv(const std::vector<TraceRow>& rows,
                     const std::string& path);

}  // namespace enh
