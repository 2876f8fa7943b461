#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "enh/commands.hpp"
#include "enh/common.hpp"

namespace {

// "1,3,5" -> {1,3,5}; rejects empty fields, junk, and non-positive radii.
std::vector<int> parse_radii(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(item, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad radius list: " + s);
    }
    if (pos != item.size() || v < 1)
      throw std::invalid_argument("bad radius list: " + s);
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("bad radius list: " + s);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"guided diffusion image enhancement"};
  app.require_subcommand(1);

  std::string config_path;
  std::string input_path;
  std::string output_path;
  long long seed = 0;
  int workers = 0;
  std::string trace_path;

  CLI::App* enh_cmd = app.add_subcommand("enhance", "enhance one image");
  enh_cmd->add_option("--config", config_path, "config file")->required();
  enh_cmd->add_option("input", input_path, "degraded input image")->required();
  enh_cmd->add_option("output", output_path, "enhanced output image");
  CLI::Option* seed_opt = enh_cmd->add_option("--seed", seed, "rng seed");
  CLI::Option* workers_opt =
      enh_cmd->add_option("--workers", workers, "patch worker threads");
  CLI::Option* trace_opt =
      enh_cmd->add_option("--trace", trace_path, "per-step csv trace");

  std::string original_path;
  std::string enhanced_path;
  enh::MetricsOptions mopt;
  std::string radii_spec;

  CLI::App* met_cmd = app.add_subcommand("metrics", "no-reference quality metrics");
  met_cmd->add_option("original", original_path, "image before enhancement")
      ->required();
  met_cmd->add_option("enhanced", enhanced_path, "image after enhancement")
      ->required();
  met_cmd->add_option("--signal-mask", mopt.signal_mask,
                      "mask selecting signal pixels, enables snr columns");
  met_cmd->add_option("--pred-mask", mopt.pred_mask,
                      "predicted mask (default: threshold of enhanced)");
  met_cmd->add_option("--gt-mask", mopt.gt_mask,
                      "ground-truth mask, enables overlap columns");
  met_cmd->add_option("--out", mopt.out_csv, "csv destination (default stdout)");
  met_cmd->add_option("--image-id", mopt.image_id,
                      "row label (default: enhanced file name)");
  met_cmd->add_option("--radii", radii_spec, "snr dilation radii, e.g. 1,3,5");
  met_cmd->add_option("--sample-cap", mopt.sample_cap,
                      "pixel pairs sampled for loe");
  met_cmd->add_flag("--exact-loe", mopt.exact_loe,
                    "use every pixel for loe regardless of cap");
  met_cmd->add_flag("--snr-linear", mopt.snr_linear,
                    "report snr as a linear ratio instead of dB");

  std::string profile = "fast";
  CLI::App* self_cmd = app.add_subcommand("selftest", "built-in numeric checks");
  self_cmd->add_option("profile", profile, "fast or full")
      ->check(CLI::IsMember({"fast", "full"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*enh_cmd) {
      enh::CliOverrides ov;
      if (*seed_opt) ov.seed = seed;
      if (*workers_opt) ov.workers = workers;
      if (*trace_opt) ov.trace = trace_path;
      return enh::cmd_enhance(config_path, input_path, output_path, ov,
                              std::cout);
    }
    if (*met_cmd) {
      if (!radii_spec.empty()) mopt.radii = parse_radii(radii_spec);
      return enh::cmd_metrics(original_path, enhanced_path, mopt, std::cout);
    }
    return enh::cmd_selftest(profile, std::cout);
  } catch (const enh::numeric_error& e) {
    enh::log_error(e.what());
    return 3;
  } catch (const enh::format_error& e) {
    enh::log_error(e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    enh::log_error(e.what());
    return 2;
  } catch (const std::ios_base::failure& e) {
    enh::log_error(e.what());
    return 2;
  } catch (const std::exception& e) {
    enh::log_error(e.what());
    return 2;
  }
}
