#include "enh/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace enh {

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

ImageTensor degrade(const ImageTensor& x, const DegradationParams& p) {
  if (!x.same_shape(p.bias)) throw std::invalid_argument("bias map shape mismatch");
  ImageTensor out = x;
  std::vector<double>& o = out.data();
  const std::vector<double>& m = p.bias.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = p.f * o[i] + m[i];
  return out;
}

double mse_loss(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("mse shape mismatch");
  const std::vector<double>& av = a.data();
  const std::vector<double>& bv = b.data();
  double s = 0.0;
  for (size_t i = 0; i < av.size(); ++i) {
    double d = av[i] - bv[i];
    s += d * d;
  }
  return s / static_cast<double>(av.size());
}

ImageTensor mse_grad(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("mse shape mismatch");
  double inv = 2.0 / static_cast<double>(a.size());
  ImageTensor out = a;
  std::vector<double>& o = out.data();
  const std::vector<double>& bv = b.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = inv * (o[i] - bv[i]);
  return out;
}

namespace {

struct Block {
  int y0, y1, x0, x1;  // half-open
  int count() const { return (y1 - y0) * (x1 - x0); }
};

std::vector<Block> block_partition(int h, int w, int region) {
  if (region < 1) throw std::invalid_argument("exposure region must be >= 1");
  std::vector<Block> out;
  for (int y = 0; y < h; y += region)
    for (int x = 0; x < w; x += region)
      out.push_back({y, std::min(y + region, h), x, std::min(x + region, w)});
  return out;
}

double block_mean(const ImageTensor& r, const Block& b) {
  double s = 0.0;
  for (int y = b.y0; y < b.y1; ++y)
    for (int x = b.x0; x < b.x1; ++x) s += r.at(0, y, x);
  return s / b.count();
}

}  // namespace

double exposure_loss(const ImageTensor& x, double target, int region) {
  ImageTensor r = channel_mean(x);
  std::vector<Block> blocks = block_partition(x.height(), x.width(), region);
  double s = 0.0;
  for (const Block& b : blocks) s += std::abs(block_mean(r, b) - target);
  return s / static_cast<double>(blocks.size());
}

ImageTensor exposure_grad(const ImageTensor& x, double target, int region) {
  ImageTensor r = channel_mean(x);
  std::vector<Block> blocks = block_partition(x.height(), x.width(), region);
  ImageTensor out(x.channels(), x.height(), x.width(), 0.0);
  double inv_blocks = 1.0 / static_cast<double>(blocks.size());
  for (const Block& b : blocks) {
    double g = sgn(block_mean(r, b) - target) * inv_blocks /
               (b.count() * x.channels());
    for (int c = 0; c < x.channels(); ++c)
      for (int y = b.y0; y < b.y1; ++y)
        for (int x0 = b.x0; x0 < b.x1; ++x0) out.at(c, y, x0) = g;
  }
  return out;
}

double smoothness_loss(const ImageTensor& m) {
  double total = 0.0;
  for (int c = 0; c < m.channels(); ++c) {
    double s = 0.0;
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x + 1 < m.width(); ++x)
        s += std::abs(m.at(c, y, x + 1) - m.at(c, y, x));
    for (int y = 0; y + 1 < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x)
        s += std::abs(m.at(c, y + 1, x) - m.at(c, y, x));
    total += s * s;
  }
  return total;
}

ImageTensor smoothness_grad(const ImageTensor& m) {
  ImageTensor out(m.channels(), m.height(), m.width(), 0.0);
  for (int c = 0; c < m.channels(); ++c) {
    double s = 0.0;
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x + 1 < m.width(); ++x)
        s += std::abs(m.at(c, y, x + 1) - m.at(c, y, x));
    for (int y = 0; y + 1 < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x)
        s += std::abs(m.at(c, y + 1, x) - m.at(c, y, x));
    double k = 2.0 * s;
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x + 1 < m.width(); ++x) {
        double g = k * sgn(m.at(c, y, x + 1) - m.at(c, y, x));
        out.at(c, y, x + 1) += g;
        out.at(c, y, x) -= g;
      }
    for (int y = 0; y + 1 < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x) {
        double g = k * sgn(m.at(c, y + 1, x) - m.at(c, y, x));
        out.at(c, y + 1, x) += g;
        out.at(c, y, x) -= g;
      }
  }
  return out;
}

GuidanceEval guidance_eval(const ImageTensor& x0_hat, const ImageTensor& y,
                           const DegradationParams& p, const GuidanceConfig& cfg,
                           int t, const NoiseSchedule& sched) {
  ImageTensor degraded = degrade(x0_hat, p);
  GuidanceEval ev;
  ev.mse = mse_loss(degraded, y);
  ev.exposure = exposure_loss(x0_hat, cfg.exposure_target, cfg.region);
  ev.smoothness = smoothness_loss(p.bias);

  ImageTensor fid = mse_grad(degraded, y);   // d(mse)/d(degraded)
  ImageTensor exp = exposure_grad(x0_hat, cfg.exposure_target, cfg.region);
  double pull = -1.0 / std::sqrt(sched.alpha_bar(t));
  ev.grad = x0_hat;
  std::vector<double>& g = ev.grad.data();
  const std::vector<double>& fv = fid.data();
  const std::vector<double>& xv = exp.data();
  double cf = cfg.scale * p.f;
  for (size_t i = 0; i < g.size(); ++i)
    g[i] = pull * (cf * fv[i] + cfg.lambda_exp * xv[i]);
  return ev;
}

ImageTensor guidance_gradient_fd(const NoisePredictor& pred,
                                 const ImageTensor& x_t, const ImageTensor& y,
                                 const DegradationParams& p,
                                 const GuidanceConfig& cfg, int t,
                                 const NoiseSchedule& sched, double h) {
  auto objective = [&](const ImageTensor& xt) {
    ImageTensor eps = pred.predict(xt, t, sched);
    ImageTensor x0 = predict_x0(xt, eps, t, sched);
    return cfg.scale * mse_loss(degrade(x0, p), y) +
           cfg.lambda_exp * exposure_loss(x0, cfg.exposure_target, cfg.region);
  };
  ImageTensor out = x_t;
  ImageTensor probe = x_t;
  std::vector<double>& o = out.data();
  std::vector<double>& pv = probe.data();
  for (size_t i = 0; i < pv.size(); ++i) {
    double saved = pv[i];
    pv[i] = saved + h;
    double up = objective(probe);
    pv[i] = saved - h;
    double dn = objective(probe);
    pv[i] = saved;
    o[i] = -(up - dn) / (2.0 * h);
  }
  return out;
}

void update_degradation(const ImageTensor& x0_hat, const ImageTensor& y,
                        DegradationParams& p, const GuidanceConfig& cfg) {
  ImageTensor degraded = degrade(x0_hat, p);
  ImageTensor r = mse_grad(degraded, y);  // 2(f x0 + m - y)/N
  const std::vector<double>& rv = r.data();
  const std::vector<double>& xv = x0_hat.data();
  double gf = 0.0;
  for (size_t i = 0; i < rv.size(); ++i) gf += rv[i] * xv[i];

  std::vector<double>& mv = p.bias.data();
  if (cfg.lambda_smooth != 0.0) {
    ImageTensor sg = smoothness_grad(p.bias);
    const std::vector<double>& sv = sg.data();
    for (size_t i = 0; i < mv.size(); ++i)
      mv[i] -= cfg.lr_m * (rv[i] + cfg.lambda_smooth * sv[i]);
  } else {
    for (size_t i = 0; i < mv.size(); ++i) mv[i] -= cfg.lr_m * rv[i];
  }
  p.f = std::clamp(p.f - cfg.lr_f * gf, cfg.f_min, cfg.f_max);
}

}  // namespace enh
