#include "enh/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "enh/common.hpp"

namespace enh {

namespace {

std::vector<int> axis_offsets(int extent, int patch, int stride) {
  std::vector<int> out;
  for (int pos = 0; pos + patch < extent; pos += stride) out.push_back(pos);
  out.push_back(extent - patch);
  return out;
}

}  // namespace

std::vector<PatchRect> build_patch_grid(int height, int width, int patch,
                                        int stride) {
  if (patch < 1 || patch > height || patch > width)
    throw std::invalid_argument("patch size must fit the image");
  if (stride < 1 || stride > patch)
    throw std::invalid_argument("stride must be in [1, patch]");
  std::vector<int> ys = axis_offsets(height, patch, stride);
  std::vector<int> xs = axis_offsets(width, patch, stride);
  std::vector<PatchRect> out;
  out.reserve(ys.size() * xs.size());
  for (int y : ys)
    for (int x : xs) out.push_back({y, x, patch});
  return out;
}

ImageTensor aggregate_patch_noise(const std::vector<ImageTensor>& parts,
                                  const std::vector<PatchRect>& rects,
                                  int channels, int height, int width) {
  if (parts.size() != rects.size())
    throw std::invalid_argument("tile list and rect list differ in length");
  ImageTensor sum(channels, height, width, 0.0);
  std::vector<double> count(static_cast<size_t>(height) * width, 0.0);
  for (size_t i = 0; i < parts.size(); ++i) {
    const PatchRect& r = rects[i];
    const ImageTensor& p = parts[i];
    if (p.channels() != channels || p.height() != r.size || p.width() != r.size)
      throw std::invalid_argument("tile shape does not match its rect");
    if (r.top < 0 || r.left < 0 || r.top + r.size > height ||
        r.left + r.size > width)
      throw std::invalid_argument("tile rect out of bounds");
    for (int c = 0; c < channels; ++c)
      for (int y = 0; y < r.size; ++y)
        for (int x = 0; x < r.size; ++x)
          sum.at(c, r.top + y, r.left + x) += p.at(c, y, x);
    for (int y = 0; y < r.size; ++y)
      for (int x = 0; x < r.size; ++x)
        count[static_cast<size_t>(r.top + y) * width + (r.left + x)] += 1.0;
  }
  for (size_t i = 0; i < count.size(); ++i)
    if (count[i] == 0.0)
      throw std::invalid_argument("patch grid leaves pixels uncovered");
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        sum.at(c, y, x) /= count[static_cast<size_t>(y) * width + x];
  return sum;
}

namespace {

ImageTensor predict_noise_tiled(const NoisePredictor& pred, const ImageTensor& x,
                                int t, const NoiseSchedule& sched,
                                const std::vector<PatchRect>& grid,
                                int workers) {
  size_t n = grid.size();
  std::vector<ImageTensor> parts(n);
  int w = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (w == 1) {
    for (size_t i = 0; i < n; ++i)
      parts[i] = pred.predict(crop(x, grid[i]), t, sched);
  } else {
    std::vector<std::exception_ptr> errs(static_cast<size_t>(w));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(w));
    for (int k = 0; k < w; ++k) {
      size_t lo = n * static_cast<size_t>(k) / static_cast<size_t>(w);
      size_t hi = n * static_cast<size_t>(k + 1) / static_cast<size_t>(w);
      pool.emplace_back([&, lo, hi, k] {
        try {
          for (size_t i = lo; i < hi; ++i)
            parts[i] = pred.predict(crop(x, grid[i]), t, sched);
        } catch (...) {
          errs[static_cast<size_t>(k)] = std::current_exception();
        }
      });
    }
    for (std::thread& th : pool) th.join();
    for (const std::exception_ptr& e : errs)
      if (e) std::rethrow_exception(e);
  }
  return aggregate_patch_noise(parts, grid, x.channels(), x.height(), x.width());
}

DegradationParams initial_params(const ImageTensor& y, const SampleConfig& cfg,
                                 RandomSource& rng,
                                 const DegradationParams* init) {
  if (init) {
    if (!init->bias.same_shape(y))
      throw std::invalid_argument("initial bias map shape mismatch");
    return *init;
  }
  DegradationParams p =
      DegradationParams::identity(y.channels(), y.height(), y.width());
  if (cfg.random_init) {
    p.f = 0.5 + rng.next_uniform();
    std::vector<double>& m = p.bias.data();
    for (double& v : m) v = 0.1 * rng.next_gaussian();
  }
  return p;
}

[[noreturn]] void throw_nonfinite(int step, int t, const GuidanceEval& ev) {
  std::ostringstream os;
  os << "non-finite sampler state at step " << step << " (t=" << t
     << "): mse=" << ev.mse << " exposure=" << ev.exposure
     << " smoothness=" << ev.smoothness;
  throw numeric_error(os.str());
}

EnhanceResult run_guided(const ImageTensor& y, const NoisePredictor& pred,
                         const NoiseSchedule& sched, const SampleConfig& cfg,
                         RandomSource& rng, const DegradationParams* init,
                         const std::vector<PatchRect>* grid) {
  if (y.empty()) throw std::invalid_argument("empty input image");
  DegradationParams params = initial_params(y, cfg, rng, init);
  ImageTensor x = gaussian_noise(rng, y.channels(), y.height(), y.width());
  EnhanceResult res;
  int T = sched.steps();
  for (int t = T; t >= 1; --t) {
    int step = T - t + 1;
    ImageTensor eps = grid
                          ? predict_noise_tiled(pred, x, t, sched, *grid,
                                                cfg.workers)
                          : pred.predict(x, t, sched);
    ImageTensor x0 = predict_x0(x, eps, t, sched);
    if (cfg.clamp_x0)
      for (double& v : x0.data()) v = std::clamp(v, -1.0, 1.0);

    GuidanceEval ev = guidance_eval(x0, y, params, cfg.guidance, t, sched);
    ImageTensor g = cfg.fd_gradient
                        ? guidance_gradient_fd(pred, x, y, params, cfg.guidance,
                                               t, sched, cfg.fd_step)
                        : std::move(ev.grad);
    if (cfg.update_params) update_degradation(x0, y, params, cfg.guidance);

    Posterior post = posterior_mean_var(x, x0, t, sched);
    std::vector<double>& m = post.mean.data();
    const std::vector<double>& gv = g.data();
    for (size_t i = 0; i < m.size(); ++i) m[i] += post.var * gv[i];

    if (t > 1) {
      ImageTensor z = gaussian_noise(rng, y.channels(), y.height(), y.width());
      double sd = std::sqrt(post.var);
      const std::vector<double>& zv = z.data();
      for (size_t i = 0; i < m.size(); ++i) m[i] += sd * zv[i];
    }
    x = std::move(post.mean);
    if (!x.all_finite()) throw_nonfinite(step, t, ev);
    if (cfg.record_trace)
      res.trace.push_back({step, t, ev.mse, ev.exposure, ev.smoothness, params.f});
  }
  res.enhanced = std::move(x);
  res.fitted = std::move(params);
  return res;
}

}  // namespace

ImageTensor sample_unconditional(const NoisePredictor& pred,
                                 const NoiseSchedule& sched, int channels,
                                 int height, int width, RandomSource& rng) {
  ImageTensor x = gaussian_noise(rng, channels, height, width);
  for (int t = sched.steps(); t >= 1; --t) {
    ImageTensor eps = pred.predict(x, t, sched);
    ImageTensor x0 = predict_x0(x, eps, t, sched);
    Posterior post = posterior_mean_var(x, x0, t, sched);
    if (t > 1) {
      ImageTensor z = gaussian_noise(rng, channels, height, width);
      double sd = std::sqrt(post.var);
      std::vector<double>& m = post.mean.data();
      const std::vector<double>& zv = z.data();
      for (size_t i = 0; i < m.size(); ++i) m[i] += sd * zv[i];
    }
    x = std::move(post.mean);
  }
  return x;
}

EnhanceResult enhance(const ImageTensor& y, const NoisePredictor& pred,
                      const NoiseSchedule& sched, const SampleConfig& cfg,
                      RandomSource& rng, const DegradationParams* init) {
  return run_guided(y, pred, sched, cfg, rng, init, nullptr);
}

EnhanceResult enhance_patched(const ImageTensor& y, const NoisePredictor& pred,
                              const NoiseSchedule& sched,
                              const SampleConfig& cfg, RandomSource& rng,
                              const DegradationParams* init) {
  std::vector<PatchRect> grid =
      build_patch_grid(y.height(), y.width(), cfg.patch, cfg.stride);
  log_info("sampling with " + std::to_string(grid.size()) + " patches (p=" +
           std::to_string(cfg.patch) + ", r=" + std::to_string(cfg.stride) +
           ")");
  return run_guided(y, pred, sched, cfg, rng, init, &grid);
}

namespace {

int round_up_16(int v) { return (v + 15) / 16 * 16; }

}  // namespace

EnhanceResult enhance_any_size(const ImageTensor& y, const NoisePredictor& pred,
                               const NoiseSchedule& sched,
                               const SampleConfig& cfg, RandomSource& rng) {
  if (y.empty()) throw std::invalid_argument("empty input image");
  int h = y.height(), w = y.width();
  int rh = round_up_16(h), rw = round_up_16(w);
  EnhanceResult res;
  if (rh <= cfg.patch && rw <= cfg.patch) {
    res = enhance(pad_edge(y, rh, rw), pred, sched, cfg, rng);
  } else {
    int ph = std::max(rh, cfg.patch);
    int pw = std::max(rw, cfg.patch);
    res = enhance_patched(pad_edge(y, ph, pw), pred, sched, cfg, rng);
  }
  if (res.enhanced.height() != h || res.enhanced.width() != w) {
    res.enhanced = crop_rect(res.enhanced, 0, 0, h, w);
    res.fitted.bias = crop_rect(res.fitted.bias, 0, 0, h, w);
  }
  return res;
}

void write_trace_csv(const std::vector<TraceRow>& rows,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);
  out << "step,t,mse,exposure,smoothness,f\n";
  char buf[128];
  for (const TraceRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g,%.17g\n", r.step,
                  r.t, r.mse, r.exposure, r.smoothness, r.f);
    out << buf;
  }
  if (!out) throw std::runtime_error("failed writing trace file: " + path);
}

}  // namespace enh
