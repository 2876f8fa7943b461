#include "enh/selftest.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "enh/guidance.hpp"
#include "enh/predictor.hpp"
#include "enh/sampler.hpp"
#include "enh/schedule.hpp"
#include "enh/tensor.hpp"

namespace enh {

namespace {

ImageTensor random_image(RandomSource& rng, int c, int h, int w, double lo,
                         double hi) {
  ImageTensor out(c, h, w);
  for (double& v : out.data()) v = lo + (hi - lo) * rng.next_uniform();
  return out;
}

double max_rel_err(const ImageTensor& got, const ImageTensor& want) {
  double worst = 0.0;
  const std::vector<double>& g = got.data();
  const std::vector<double>& w = want.data();
  for (size_t i = 0; i < g.size(); ++i) {
    double denom = std::max(std::abs(w[i]), 1e-8);
    worst = std::max(worst, std::abs(g[i] - w[i]) / denom);
  }
  return worst;
}

SelfTestResult check_schedule_identities() {
  SelfTestResult r{"schedule-identities", true, ""};
  std::ostringstream why;
  NoiseSchedule two = NoiseSchedule::linear(2, 0.1, 0.2);
  if (std::abs(two.alpha_bar(2) - 0.72) > 1e-15) {
    r.pass = false;
    why << "alpha_bar(2) != 0.72; ";
  }
  NoiseSchedule sched = NoiseSchedule::linear(1000);
  if (sched.posterior_var(1) != 0.0) {
    r.pass = false;
    why << "posterior_var(1) != 0; ";
  }
  double prod = 1.0;
  for (int t = 1; t <= 1000; ++t) {
    prod *= sched.alpha(t);
    if (prod != sched.alpha_bar(t)) {
      r.pass = false;
      why << "alpha_bar recurrence mismatch at t=" << t << "; ";
      break;
    }
  }
  RandomSource rng(11);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    int t = 1 + static_cast<int>(rng.next_uniform() * 999.999);
    ImageTensor x0 = random_image(rng, 1, 3, 3, -1.0, 1.0);
    ImageTensor eps = gaussian_noise(rng, 1, 3, 3);
    ImageTensor back = predict_x0(q_sample(x0, eps, t, sched), eps, t, sched);
    worst = std::max(worst, max_rel_err(back, x0));
  }
  if (worst >= 1e-12) {
    r.pass = false;
    why << "round-trip rel err " << worst << "; ";
  }
  r.detail = why.str();
  return r;
}

SelfTestResult check_gradient_oracle() {
  SelfTestResult r{"gradient-oracle", true, ""};
  std::ostringstream why;
  NoiseSchedule sched = NoiseSchedule::linear(1000);
  RandomSource rng(23);
  GuidanceConfig cfg;
  cfg.scale = 2.0;
  cfg.lambda_exp = 0.5;
  cfg.region = 3;
  const double h = 1e-5;

  for (int trial = 0; trial < 5 && r.pass; ++trial) {
    int t = 300 + trial * 150;
    ImageTensor y = random_image(rng, 1, 6, 6, 0.0, 1.0);
    ImageTensor eps_fixed = gaussian_noise(rng, 1, 6, 6);
    ImageTensor x_t = random_image(rng, 1, 6, 6, -0.5, 0.5);
    DegradationParams p{0.8, random_image(rng, 1, 6, 6, -0.1, 0.1)};

    ImageTensor x0 = predict_x0(x_t, eps_fixed, t, sched);
    ImageTensor analytic =
        guidance_eval(x0, y, p, cfg, t, sched).grad;

    // numeric gradient with the noise estimate held fixed
    auto objective = [&](const ImageTensor& xt) {
      ImageTensor est = predict_x0(xt, eps_fixed, t, sched);
      return cfg.scale * mse_loss(degrade(est, p), y) +
             cfg.lambda_exp *
                 exposure_loss(est, cfg.exposure_target, cfg.region);
    };
    ImageTensor fd = x_t;
    ImageTensor probe = x_t;
    for (size_t i = 0; i < probe.data().size(); ++i) {
      double saved = probe.data()[i];
      probe.data()[i] = saved + h;
      double up = objective(probe);
      probe.data()[i] = saved - h;
      double dn = objective(probe);
      probe.data()[i] = saved;
      fd.data()[i] = -(up - dn) / (2.0 * h);
    }
    double err = max_rel_err(analytic, fd);
    if (err >= 1e-5) {
      r.pass = false;
      why << "guidance gradient rel err " << err << " at trial " << trial;
    }
  }
  r.detail = why.str();
  return r;
}

// Simpson integration of the scalar posterior mean E[x0 | x_t] for a
// mixture prior, far more points than needed for 1e-8 agreement.
double quadrature_posterior_mean(double x_t, int t, const NoiseSchedule& sched,
                                 const std::vector<double>& means,
                                 const std::vector<double>& weights,
                                 double sigma) {
  double a = std::sqrt(sched.alpha_bar(t));
  double om = sched.one_minus_alpha_bar(t);
  double num = 0.0, den = 0.0;
  for (size_t k = 0; k < means.size(); ++k) {
    double lo = means[k] - 12.0 * sigma;
    double hi = means[k] + 12.0 * sigma;
    const int n = 80000;  // even; oversampled so the t=1 narrow likelihood
                          // still integrates well below the 1e-8 tolerance
    double step = (hi - lo) / n;
    double fnum = 0.0, fden = 0.0;
    for (int i = 0; i <= n; ++i) {
      double x0 = lo + step * i;
      double pr = std::exp(-0.5 * (x0 - means[k]) * (x0 - means[k]) /
                           (sigma * sigma));
      double lik = std::exp(-0.5 * (x_t - a * x0) * (x_t - a * x0) / om);
      double wgt = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      fnum += wgt * x0 * pr * lik;
      fden += wgt * pr * lik;
    }
    num += weights[k] * fnum * step / 3.0;
    den += weights[k] * fden * step / 3.0;
  }
  return num / den;
}

SelfTestResult check_predictor_quadrature() {
  SelfTestResult r{"predictor-quadrature", true, ""};
  std::ostringstream why;
  NoiseSchedule sched = NoiseSchedule::linear(1000);
  GaussianPredictor gp(0.3, 0.7);
  MixturePredictor mp({-0.5, 0.8}, {0.4, 0.6}, 0.35);
  for (int t : {1, 500, 1000}) {
    for (double xv : {-0.9, 0.1, 1.2}) {
      ImageTensor x(1, 1, 1, xv);
      double a = std::sqrt(sched.alpha_bar(t));
      double om = sched.one_minus_alpha_bar(t);

      double qg = quadrature_posterior_mean(xv, t, sched, {0.3}, {1.0}, 0.7);
      double eg = (xv - a * qg) / std::sqrt(om);
      double got_g = gp.predict(x, t, sched).at(0, 0, 0);
      if (std::abs(got_g - eg) >= 1e-8) {
        r.pass = false;
        why << "gaussian t=" << t << " x=" << xv << " err "
            << std::abs(got_g - eg) << "; ";
      }
      double qm = quadrature_posterior_mean(xv, t, sched, {-0.5, 0.8},
                                            {0.4, 0.6}, 0.35);
      double em = (xv - a * qm) / std::sqrt(om);
      double got_m = mp.predict(x, t, sched).at(0, 0, 0);
      if (std::abs(got_m - em) >= 1e-8) {
        r.pass = false;
        why << "mixture t=" << t << " x=" << xv << " err "
            << std::abs(got_m - em) << "; ";
      }
    }
  }
  r.detail = why.str();
  return r;
}

SelfTestResult check_unconditional_stats() {
  SelfTestResult r{"unconditional-stats", true, ""};
  std::ostringstream why;
  const double mu = 0.3, sigma = 1.0;
  NoiseSchedule sched = NoiseSchedule::linear(1000).respaced(100);
  GaussianPredictor pred(mu, sigma);
  const int runs = 500;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < runs; ++i) {
    RandomSource rng(1000 + static_cast<std::uint64_t>(i));
    double v = sample_unconditional(pred, sched, 1, 1, 1, rng).at(0, 0, 0);
    sum += v;
    sq += v * v;
  }
  double mean = sum / runs;
  double var = sq / runs - mean * mean;
  if (std::abs(mean - mu) >= 4.0 * sigma / std::sqrt(double(runs))) {
    r.pass = false;
    why << "mean " << mean << " vs " << mu << "; ";
  }
  if (var < 0.7 * sigma * sigma || var > 1.15 * sigma * sigma) {
    r.pass = false;
    why << "variance " << var << " outside [0.7, 1.15]; ";
  }
  r.detail = why.str();
  return r;
}

SelfTestResult check_patch_equivalence() {
  SelfTestResult r{"patch-equivalence", true, ""};
  std::ostringstream why;
  NoiseSchedule sched = NoiseSchedule::linear(1000).respaced(25);
  GaussianPredictor pred(0.4, 0.3);
  RandomSource img_rng(7);
  ImageTensor y = random_image(img_rng, 1, 32, 32, 0.0, 1.0);

  SampleConfig whole;
  whole.guidance.scale = 1.0;
  whole.patch = 32;
  whole.stride = 16;
  RandomSource r1(42), r2(42);
  EnhanceResult a = enhance(y, pred, sched, whole, r1);
  EnhanceResult b = enhance_patched(y, pred, sched, whole, r2);
  if (!identical(a.enhanced, b.enhanced)) {
    r.pass = false;
    why << "single-tile result differs from whole-image; ";
  }

  SampleConfig tiled = whole;
  tiled.patch = 16;
  tiled.stride = 8;
  RandomSource r3(42);
  EnhanceResult c = enhance_patched(y, pred, sched, tiled, r3);
  double err = max_rel_err(c.enhanced, a.enhanced);
  if (err >= 1e-9) {
    r.pass = false;
    why << "overlapping tiles with a pixelwise predictor drifted, rel err "
        << err << "; ";
  }
  r.detail = why.str();
  return r;
}

// Linear-Gaussian end-to-end check against the conjugate closed form, with
// the degradation fixed at its true value and updates disabled.
SelfTestResult check_posterior_recovery() {
  SelfTestResult r{"posterior-recovery", true, ""};
  std::ostringstream why;
  const double mu0 = 0.5, sigma0 = 0.3;
  const double f_true = 0.5, m_true = 0.1, x_true = 0.8;
  const double s = 1.0;
  const int side = 8, runs = 200;
  const double n = side * side;

  NoiseSchedule sched = NoiseSchedule::linear(1000);
  GaussianPredictor pred(mu0, sigma0);
  ImageTensor y(1, side, side, f_true * x_true + m_true);
  DegradationParams truth{f_true, ImageTensor(1, side, side, m_true)};

  SampleConfig cfg;
  cfg.guidance.scale = s;
  cfg.guidance.lambda_exp = 0.0;
  cfg.guidance.lambda_smooth = 0.0;
  cfg.update_params = false;

  // conjugate posterior mean for prior N(mu0, sigma0^2) and the quadratic
  // data term s * mse(f x + m, y)
  double prec = 1.0 / (sigma0 * sigma0) + 2.0 * s * f_true * f_true / n;
  double target = (mu0 / (sigma0 * sigma0) +
                   (2.0 * s * f_true / n) * (f_true * x_true)) /
                  prec;

  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < runs; ++i) {
    RandomSource rng(9000 + static_cast<std::uint64_t>(i));
    EnhanceResult res = enhance(y, pred, sched, cfg, rng, &truth);
    double m = mean_value(res.enhanced);
    sum += m;
    sq += m * m;
  }
  double mean = sum / runs;
  double sd = std::sqrt((sq / runs - mean * mean) * runs / (runs - 1));
  double se = sd / std::sqrt(double(runs));
  if (std::abs(mean - target) >= 3.0 * se) {
    r.pass = false;
    why << "mean " << mean << " vs conjugate " << target << " (3se "
        << 3.0 * se << ")";
  }
  r.detail = why.str();
  return r;
}

}  // namespace

std::vector<SelfTestResult> run_selftests(const std::string& profile) {
  if (profile != "fast" && profile != "full")
    throw std::invalid_argument("profile must be 'fast' or 'full'");
  std::vector<SelfTestResult> out;
  out.push_back(check_schedule_identities());
  out.push_back(check_gradient_oracle());
  out.push_back(check_predictor_quadrature());
  out.push_back(check_unconditional_stats());
  out.push_back(check_patch_equivalence());
  if (profile == "full") out.push_back(check_posterior_recovery());
  return out;
}

}  // namespace enh
