#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace enh {

// CLI flags that override values from the config file.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> trace;
};

// Runs the configured enhancement on one image. Returns 0 on success;
// input and numeric failures propagate as exceptions for the caller to
// map onto exit codes. Prints the fitted gain and final losses to `out`.
int cmd_enhance(const std::string& config_path, const std::string& input_path,
                const std::string& output_path, const CliOverrides& overrides,
                std::ostream& out);

struct MetricsOptions {
  std::string signal_mask;            // enables the snr columns
  std::string pred_mask;              // overlap prediction; default is the
                                      // thresholded enhanced image
  std::string gt_mask;                // enables pa/iou/dice columns
  std::string out_csv;                // write here instead of `out`
  std::string image_id;               // default: enhanced file name
  std::vector<int> radii = {1, 3, 5, 7, 9};
  bool exact_loe = false;
  int sample_cap = 10000;
  bool snr_linear = false;
};

// Scores enhanced against original and writes one CSV header + row.
int cmd_metrics(const std::string& original_path,
                const std::string& enhanced_path, const MetricsOptions& opt,
                std::ostream& out);

// Prints "PASS <name>" / "FAIL <name> (detail)" per check; returns 0 iff
// everything passed, 1 otherwise.
int cmd_selftest(const std::string& profile, std::ostream& out);

}  // namespace enh
