#include "enh/schedule.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "enh/common.hpp"

namespace enh {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : beta_(std::move(betas)) {
  if (beta_.empty()) throw std::invalid_argument("schedule needs at least one step");
  alpha_.resize(beta_.size());
  alpha_bar_.resize(beta_.size() + 1);
  om_.resize(beta_.size() + 1);
  alpha_bar_[0] = 1.0;
  om_[0] = 0.0;
  for (size_t i = 0; i < beta_.size(); ++i) {
    double b = beta_[i];
    if (!(b > 0.0 && b < 1.0))
      throw std::invalid_argument("beta out of range at step " + std::to_string(i + 1));
    alpha_[i] = 1.0 - b;
    alpha_bar_[i + 1] = alpha_bar_[i] * alpha_[i];
    om_[i + 1] = om_[i] * alpha_[i] + b;
  }
}

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw std::invalid_argument("schedule needs at least one step");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw std::invalid_argument("beta range invalid");
  std::vector<double> betas(static_cast<size_t>(steps));
  if (steps == 1) {
    betas[0] = beta_start;
  } else {
    double d = (beta_end - beta_start) / (steps - 1);
    for (int i = 0; i < steps; ++i) betas[static_cast<size_t>(i)] = beta_start + d * i;
  }
  return NoiseSchedule(std::move(betas));
}

NoiseSchedule NoiseSchedule::respaced(int count) const {
  int T = steps();
  if (count < 1 || count > T) throw std::invalid_argument("respaced count out of range");
  std::vector<double> betas(static_cast<size_t>(count));
  long long prev = 0;
  for (int i = 1; i <= count; ++i) {
    long long t = static_cast<long long>(i) * T / count;
    betas[static_cast<size_t>(i - 1)] =
        1.0 - alpha_bar_[static_cast<size_t>(t)] / alpha_bar_[static_cast<size_t>(prev)];
    prev = t;
  }
  return NoiseSchedule(std::move(betas));
}

void NoiseSchedule::check_step(int t, int lo) const {
  if (t < lo || t > steps())
    throw std::invalid_argument("timestep " + std::to_string(t) + " outside [" +
                                std::to_string(lo) + ", " + std::to_string(steps()) + "]");
}

double NoiseSchedule::beta(int t) const {
  check_step(t, 1);
  return beta_[static_cast<size_t>(t - 1)];
}

double NoiseSchedule::alpha(int t) const {
  check_step(t, 1);
  return alpha_[static_cast<size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar(int t) const {
  check_step(t, 0);
  return alpha_bar_[static_cast<size_t>(t)];
}

double NoiseSchedule::one_minus_alpha_bar(int t) const {
  check_step(t, 0);
  return om_[static_cast<size_t>(t)];
}

double NoiseSchedule::posterior_var(int t) const {
  check_step(t, 1);
  // om_[0] == 0 makes this exactly 0 at t == 1.
  return om_[static_cast<size_t>(t - 1)] / om_[static_cast<size_t>(t)] *
         beta_[static_cast<size_t>(t - 1)];
}

double NoiseSchedule::posterior_coef_x0(int t) const {
  check_step(t, 1);
  // At t == 1: sqrt(1) * beta_1 / om_1 and om_1 == beta_1, so exactly 1.
  return std::sqrt(alpha_bar_[static_cast<size_t>(t - 1)]) *
         beta_[static_cast<size_t>(t - 1)] / om_[static_cast<size_t>(t)];
}

double NoiseSchedule::posterior_coef_xt(int t) const {
  check_step(t, 1);
  return std::sqrt(alpha_[static_cast<size_t>(t - 1)]) *
         om_[static_cast<size_t>(t - 1)] / om_[static_cast<size_t>(t)];
}

ImageTensor q_sample(const ImageTensor& x0, const ImageTensor& eps, int t,
                     const NoiseSchedule& sched) {
  if (!x0.same_shape(eps)) throw std::invalid_argument("q_sample shape mismatch");
  if (t < 1)
    throw std::invalid_argument("timestep " + std::to_string(t) +
                                " outside [1, " + std::to_string(sched.steps()) + "]");
  double a = std::sqrt(sched.alpha_bar(t));
  double b = std::sqrt(sched.one_minus_alpha_bar(t));
  ImageTensor out = x0;
  const std::vector<double>& e = eps.data();
  std::vector<double>& o = out.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = a * o[i] + b * e[i];
  return out;
}

ImageTensor predict_x0(const ImageTensor& x_t, const ImageTensor& eps_hat, int t,
                       const NoiseSchedule& sched) {
  if (!x_t.same_shape(eps_hat)) throw std::invalid_argument("predict_x0 shape mismatch");
  if (t < 1)
    throw std::invalid_argument("timestep " + std::to_string(t) +
                                " outside [1, " + std::to_string(sched.steps()) + "]");
  double a = std::sqrt(sched.alpha_bar(t));
  double b = std::sqrt(sched.one_minus_alpha_bar(t));
  ImageTensor out = x_t;
  const std::vector<double>& e = eps_hat.data();
  std::vector<double>& o = out.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = (o[i] - b * e[i]) / a;
  return out;
}

Posterior posterior_mean_var(const ImageTensor& x_t, const ImageTensor& x0_hat,
                             int t, const NoiseSchedule& sched) {
  if (!x_t.same_shape(x0_hat)) throw std::invalid_argument("posterior shape mismatch");
  double c0 = sched.posterior_coef_x0(t);
  double c1 = sched.posterior_coef_xt(t);
  Posterior p{x0_hat, sched.posterior_var(t)};
  const std::vector<double>& xt = x_t.data();
  std::vector<double>& m = p.mean.data();
  for (size_t i = 0; i < m.size(); ++i) m[i] = c0 * m[i] + c1 * xt[i];
  return p;
}

}  // namespace enh
