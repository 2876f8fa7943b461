#pragma once

#include <vector>

#include "enh/tensor.hpp"

namespace enh {

// Forward-process variance schedule plus the derived quantities the sampler
// needs. Timesteps are 1-based: beta/alpha are defined for t in [1, T],
// alpha_bar for t in [0, T] with alpha_bar(0) == 1. alpha_bar is a sequential
// double-precision product of the alphas, so the recurrence
// alpha_bar(t) == alpha_bar(t-1) * alpha(t) holds exactly. The complement
// 1 - alpha_bar is kept in its own recurrence
// (om_t = om_{t-1} * alpha_t + beta_t, om_0 = 0) rather than formed by
// subtraction; this keeps the t == 1 posterior identities exact.
class NoiseSchedule {
 public:
  // Betas linearly spaced over [beta_start, beta_end] inclusive; a single
  // step uses beta_start.
  static NoiseSchedule linear(int steps, double beta_start = 1e-4,
                              double beta_end = 0.02);

  // Coarser schedule running the same marginals on a subsequence of
  // timesteps: t_i = floor(i*T/count) for i in [1, count] (always ends at T).
  // The new betas are 1 - alpha_bar(t_i)/alpha_bar(t_{i-1}).
  NoiseSchedule respaced(int count) const;

  int steps() const { return static_cast<int>(beta_.size()); }
  double beta(int t) const;
  double alpha(int t) const;
  double alpha_bar(int t) const;            // t in [0, T]
  double one_minus_alpha_bar(int t) const;  // t in [0, T]

  // Reverse-transition variance; exactly 0 at t == 1.
  double posterior_var(int t) const;
  double posterior_coef_x0(int t) const;  // exactly 1 at t == 1
  double posterior_coef_xt(int t) const;  // exactly 0 at t == 1

 private:
  explicit NoiseSchedule(std::vector<double> betas);
  void check_step(int t, int lo) const;

  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;  // steps()+1 entries, index 0 is 1.0
  std::vector<double> om_;         // 1 - alpha_bar, same indexing
};

// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps
ImageTensor q_sample(const ImageTensor& x0, const ImageTensor& eps, int t,
                     const NoiseSchedule& sched);

// Inverts q_sample for a given noise estimate.
ImageTensor predict_x0(const ImageTensor& x_t, const ImageTensor& eps_hat,
                       int t, const NoiseSchedule& sched);

struct Posterior {
  ImageTensor mean;
  double var = 0.0;
};

// Mean and variance of the reverse transition given (x_t, x0 estimate).
Posterior posterior_mean_var(const ImageTensor& x_t,
                             const ImageTensor& x0_hat, int t,
                             const NoiseSchedule& sched);

}  // namespace enh
