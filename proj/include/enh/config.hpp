#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "enh/guidance.hpp"
#include "enh/sampler.hpp"

namespace enh {

// Whole-engine configuration, read from a flat key = value text file.
// '#' starts a comment; blank lines are skipped; unknown keys are errors.
// serialize() emits every effective value, so parse(serialize(c)) == c.
struct EngineConfig {
  // schedule block
  std::string schedule_family = "linear";
  int schedule_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int respace = 0;  // 0 keeps the full schedule

  // predictor block
  std::string predictor_kind = "gaussian";  // gaussian | mixture | denoiser
  double predictor_mean = 0.5;
  std::string predictor_mean_image;  // optional image path, overrides mean
  double predictor_sigma = 0.2;
  std::vector<double> mixture_means = {0.25, 0.75};
  std::vector<double> mixture_weights = {0.5, 0.5};
  std::string denoiser_weights;  // DNW1 path, required for kind=denoiser

  // guidance + sampling blocks
  SampleConfig sample;  // guidance.*, patch.p, patch.r and behavior switches

  // run block
  std::uint64_t seed = 0;
  std::string trace_path;   // empty disables the trace
  std::string output_path;  // default output when the CLI gives none

  bool operator==(const EngineConfig&) const = default;
};

EngineConfig parse_config(const std::string& text);
EngineConfig load_config(const std::string& path);
std::string serialize_config(const EngineConfig& cfg);

// Range checks shared by parse and by programmatic construction.
void validate_config(const EngineConfig& cfg);

// Builds the configured schedule (with respacing applied).
NoiseSchedule make_schedule(const EngineConfig& cfg);

// Builds the configured predictor; loads mean image / weight files.
std::unique_ptr<NoisePredictor> make_predictor(const EngineConfig& cfg);

}  // namespace enh
