#include "enh/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "enh/common.hpp"
#include "enh/config.hpp"
#include "enh/metrics.hpp"
#include "enh/png_io.hpp"
#include "enh/sampler.hpp"
#include "enh/selftest.hpp"

namespace enh {

namespace {

std::string fmtg(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

int cmd_enhance(const std::string& config_path, const std::string& input_path,
                const std::string& output_path, const CliOverrides& overrides,
                std::ostream& out) {
  EngineConfig cfg = load_config(config_path);
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.workers) cfg.sample.workers = *overrides.workers;
  if (overrides.trace) cfg.trace_path = *overrides.trace;
  validate_config(cfg);

  std::string dest = output_path.empty() ? cfg.output_path : output_path;
  if (dest.empty())
    throw std::invalid_argument("no output path (argument or run.output)");

  NoiseSchedule sched = make_schedule(cfg);
  std::unique_ptr<NoisePredictor> pred = make_predictor(cfg);
  ImageTensor y = load_image(input_path);
  log_info("input " + std::to_string(y.width()) + "x" +
           std::to_string(y.height()) + "x" + std::to_string(y.channels()) +
           ", " + std::to_string(sched.steps()) + " steps");

  cfg.sample.record_trace = !cfg.trace_path.empty();
  RandomSource rng(cfg.seed);
  EnhanceResult res = enhance_any_size(y, *pred, sched, cfg.sample, rng);

  save_image(res.enhanced, dest);
  if (!cfg.trace_path.empty()) write_trace_csv(res.trace, cfg.trace_path);

  double mse = mse_loss(degrade(res.enhanced, res.fitted), y);
  double exposure = exposure_loss(res.enhanced, cfg.sample.guidance.exposure_target,
                                  cfg.sample.guidance.region);
  double smooth = smoothness_loss(res.fitted.bias);
  out << "f=" << fmtg(res.fitted.f) << " mse=" << fmtg(mse)
      << " exposure=" << fmtg(exposure) << " smoothness=" << fmtg(smooth)
      << "\n";
  return 0;
}

int cmd_metrics(const std::string& original_path,
                const std::string& enhanced_path, const MetricsOptions& opt,
                std::ostream& out) {
  ImageTensor original = load_image(original_path);
  ImageTensor enhanced = load_image(enhanced_path);
  if (original.height() != enhanced.height() ||
      original.width() != enhanced.width())
    throw std::invalid_argument("image dimensions mismatch");
  if (opt.sample_cap < 2)
    throw std::invalid_argument("sample cap must be >= 2");

  std::string id = opt.image_id;
  if (id.empty())
    id = std::filesystem::path(enhanced_path).filename().string();

  int cap = opt.sample_cap;
  if (opt.exact_loe) {
    std::size_t m = static_cast<std::size_t>(enhanced.height()) * enhanced.width();
    cap = static_cast<int>(std::max<std::size_t>(m, 2));
  }

  std::string header = "image_id,loe,entropy";
  std::string row = id + "," + fmtg(loe(original, enhanced, cap)) + "," +
                    fmtg(entropy(enhanced));

  if (!opt.signal_mask.empty()) {
    BinaryMask signal = mask_from_image(load_image(opt.signal_mask));
    for (int r : opt.radii) {
      header += ",snr_r" + std::to_string(r);
      row += "," + fmtg(snr_dilated(enhanced, signal, r, opt.snr_linear));
    }
  }
  if (!opt.gt_mask.empty()) {
    BinaryMask gt = mask_from_image(load_image(opt.gt_mask));
    BinaryMask pred = opt.pred_mask.empty()
                          ? mask_from_image(enhanced)
                          : mask_from_image(load_image(opt.pred_mask));
    OverlapMetrics om = overlap_metrics(pred, gt);
    header += ",pa,iou,dice";
    row += "," + fmtg(om.pa) + "," + fmtg(om.iou) + "," + fmtg(om.dice);
  }

  if (!opt.out_csv.empty()) {
    std::ofstream f(opt.out_csv);
    if (!f) throw std::invalid_argument("cannot write csv: " + opt.out_csv);
    f << header << "\n" << row << "\n";
  } else {
    out << header << "\n" << row << "\n";
  }
  return 0;
}

int cmd_selftest(const std::string& profile, std::ostream& out) {
  std::vector<SelfTestResult> results = run_selftests(profile);
  bool all = true;
  for (const SelfTestResult& r : results) {
    if (r.pass) {
      out << "PASS " << r.name << "\n";
    } else {
      out << "FAIL " << r.name << " (" << r.detail << ")\n";
      all = false;
    }
  }
  return all ? 0 : 1;
}

}  // namespace enh
