#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "enh/schedule.hpp"
#include "enh/tensor.hpp"

namespace enh {

// Estimates the forward-process noise eps from a noisy state x_t.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual ImageTensor predict(const ImageTensor& x_t, int t,
                              const NoiseSchedule& sched) const = 0;
};

// Exact minimum-MSE noise estimate when the clean image is a priori
// N(mu0, sigma0^2 I). The posterior mean of x0 given x_t is
//   (sqrt(ab) sigma0^2 x_t + (1-ab) mu0) / (ab sigma0^2 + (1-ab))
// and the noise estimate follows by inverting the forward map.
// sigma0 == 0 collapses the prior to a point mass at mu0.
class GaussianPredictor : public NoisePredictor {
 public:
  GaussianPredictor(double mean, double sigma);
  GaussianPredictor(ImageTensor mean_image, double sigma);

  ImageTensor predict(const ImageTensor& x_t, int t,
                      const NoiseSchedule& sched) const override;

  // Posterior mean of the clean image; exposed for direct checks.
  ImageTensor posterior_x0(const ImageTensor& x_t, int t,
                           const NoiseSchedule& sched) const;

 private:
  std::optional<ImageTensor> mean_image_;
  double mean_ = 0.0;
  double sigma_ = 1.0;
};

// Prior is a K-component mixture of isotropic Gaussians with shared sigma0
// and fixed weights. Component means are either scalars (constant images) or
// full mean images. Exact posterior: responsibilities over components, then
// a convex combination of the per-component posterior means (which share
// the x_t coefficient).
class MixturePredictor : public NoisePredictor {
 public:
  MixturePredictor(std::vector<double> means, std::vector<double> weights,
                   double sigma);
  MixturePredictor(std::vector<ImageTensor> means, std::vector<double> weights,
                   double sigma);

  ImageTensor predict(const ImageTensor& x_t, int t,
                      const NoiseSchedule& sched) const override;

  // Posterior component probabilities given the full image state.
  // Computed in log space; the shared normalizing constant cancels.
  std::vector<double> responsibilities(const ImageTensor& x_t, int t,
                                       const NoiseSchedule& sched) const;

  const std::vector<double>& weights() const { return weights_; }

 private:
  void check_weights();  // validates and normalizes
  double component_mean(size_t k, size_t i) const {
    return mean_images_.empty() ? means_[k] : mean_images_[k].data()[i];
  }

  std::vector<double> means_;              // scalar means, or
  std::vector<ImageTensor> mean_images_;   // per-component mean images
  std::vector<double> weights_;            // normalized at construction
  double sigma_ = 1.0;
};

// Small convolutional denoiser loaded from a weight file. Layers are 3x3
// cross-correlations over reflect-padded planes with ReLU between layers
// (none after the last). The timestep enters as an extra constant input
// channel holding t / steps of the active schedule, so the first layer
// takes image channels + 1 and the last layer emits image channels.
class ConvDenoiser : public NoisePredictor {
 public:
  struct Layer {
    int in_ch = 0;
    int out_ch = 0;
    std::vector<double> weights;  // [out][in][ky][kx], 3x3
    std::vector<double> bias;     // [out]
  };

  static ConvDenoiser load(const std::string& path);
  static ConvDenoiser load(std::istream& in);

  ImageTensor predict(const ImageTensor& x_t, int t,
                      const NoiseSchedule& sched) const override;

  int input_channels() const { return layers_.front().in_ch; }
  int output_channels() const { return layers_.back().out_ch; }

 private:
  explicit ConvDenoiser(std::vector<Layer> layers);
  std::vector<Layer> layers_;
};

}  // namespace enh
