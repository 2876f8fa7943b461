#include "enh/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <stdexcept>
#include <string>

#include "enh/common.hpp"

namespace enh {

GaussianPredictor::GaussianPredictor(double mean, double sigma)
    : mean_(mean), sigma_(sigma) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("prior sigma must be >= 0");
}

GaussianPredictor::GaussianPredictor(ImageTensor mean_image, double sigma)
    : mean_image_(std::move(mean_image)), sigma_(sigma) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("prior sigma must be >= 0");
}

ImageTensor GaussianPredictor::posterior_x0(const ImageTensor& x_t, int t,
                                            const NoiseSchedule& sched) const {
  if (mean_image_ && !mean_image_->same_shape(x_t))
    throw std::invalid_argument("prior mean image shape mismatch");
  double ab = sched.alpha_bar(t);
  double om = sched.one_minus_alpha_bar(t);
  double s2 = sigma_ * sigma_;
  double d = ab * s2 + om;
  double cx = std::sqrt(ab) * s2 / d;
  double cm = om / d;
  ImageTensor out = x_t;
  std::vector<double>& o = out.data();
  if (mean_image_) {
    const std::vector<double>& m = mean_image_->data();
    for (size_t i = 0; i < o.size(); ++i) o[i] = cx * o[i] + cm * m[i];
  } else {
    double add = cm * mean_;
    for (size_t i = 0; i < o.size(); ++i) o[i] = cx * o[i] + add;
  }
  return out;
}

ImageTensor GaussianPredictor::predict(const ImageTensor& x_t, int t,
                                       const NoiseSchedule& sched) const {
  ImageTensor x0 = posterior_x0(x_t, t, sched);
  double a = std::sqrt(sched.alpha_bar(t));
  double b = std::sqrt(sched.one_minus_alpha_bar(t));
  ImageTensor out = x_t;
  std::vector<double>& o = out.data();
  const std::vector<double>& p = x0.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = (o[i] - a * p[i]) / b;
  return out;
}

MixturePredictor::MixturePredictor(std::vector<double> means,
                                   std::vector<double> weights, double sigma)
    : means_(std::move(means)), weights_(std::move(weights)), sigma_(sigma) {
  if (means_.empty() || means_.size() != weights_.size())
    throw std::invalid_argument("mixture needs matching nonempty means and weights");
  if (!(sigma >= 0.0)) throw std::invalid_argument("prior sigma must be >= 0");
  check_weights();
}

MixturePredictor::MixturePredictor(std::vector<ImageTensor> means,
                                   std::vector<double> weights, double sigma)
    : mean_images_(std::move(means)), weights_(std::move(weights)), sigma_(sigma) {
  if (mean_images_.empty() || mean_images_.size() != weights_.size())
    throw std::invalid_argument("mixture needs matching nonempty means and weights");
  for (const ImageTensor& m : mean_images_)
    if (!m.same_shape(mean_images_.front()))
      throw std::invalid_argument("mixture mean images must share one shape");
  if (!(sigma >= 0.0)) throw std::invalid_argument("prior sigma must be >= 0");
  check_weights();
}

void MixturePredictor::check_weights() {
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0)) throw std::invalid_argument("mixture weights must be positive");
    sum += w;
  }
  for (double& w : weights_) w /= sum;
}

std::vector<double> MixturePredictor::responsibilities(
    const ImageTensor& x_t, int t, const NoiseSchedule& sched) const {
  if (!mean_images_.empty() && !mean_images_.front().same_shape(x_t))
    throw std::invalid_argument("mixture mean image shape mismatch");
  double ab = sched.alpha_bar(t);
  double om = sched.one_minus_alpha_bar(t);
  double sab = std::sqrt(ab);
  double v = ab * sigma_ * sigma_ + om;  // shared marginal variance
  size_t k = weights_.size();
  std::vector<double> logp(k);
  const std::vector<double>& x = x_t.data();
  for (size_t j = 0; j < k; ++j) {
    double ss = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      double d = x[i] - sab * component_mean(j, i);
      ss += d * d;
    }
    logp[j] = std::log(weights_[j]) - ss / (2.0 * v);
  }
  double top = *std::max_element(logp.begin(), logp.end());
  double z = 0.0;
  for (size_t j = 0; j < k; ++j) {
    logp[j] = std::exp(logp[j] - top);
    z += logp[j];
  }
  for (size_t j = 0; j < k; ++j) logp[j] /= z;
  return logp;
}

ImageTensor MixturePredictor::predict(const ImageTensor& x_t, int t,
                                      const NoiseSchedule& sched) const {
  std::vector<double> r = responsibilities(x_t, t, sched);
  double ab = sched.alpha_bar(t);
  double om = sched.one_minus_alpha_bar(t);
  double s2 = sigma_ * sigma_;
  double d = ab * s2 + om;
  double cx = std::sqrt(ab) * s2 / d;
  double cm = om / d;
  double a = std::sqrt(ab);
  double b = std::sqrt(om);
  ImageTensor out = x_t;
  std::vector<double>& o = out.data();
  for (size_t i = 0; i < o.size(); ++i) {
    double mbar = 0.0;
    for (size_t j = 0; j < r.size(); ++j) mbar += r[j] * component_mean(j, i);
    double x0 = cx * o[i] + cm * mbar;
    o[i] = (o[i] - a * x0) / b;
  }
  return out;
}

namespace {

uint32_t read_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw format_error(std::string("denoiser file truncated in ") + what);
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

void read_f32s(std::istream& in, std::vector<double>& out, size_t n,
               const char* what) {
  out.resize(n);
  std::vector<unsigned char> buf(n * 4);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!in) throw format_error(std::string("denoiser file truncated in ") + what);
  for (size_t i = 0; i < n; ++i) {
    uint32_t bits = static_cast<uint32_t>(buf[4 * i]) |
                    static_cast<uint32_t>(buf[4 * i + 1]) << 8 |
                    static_cast<uint32_t>(buf[4 * i + 2]) << 16 |
                    static_cast<uint32_t>(buf[4 * i + 3]) << 24;
    float f;
    std::memcpy(&f, &bits, 4);
    out[i] = static_cast<double>(f);
  }
}

// reflect without repeating the border sample; 3x3 kernels only ever
// step one past the edge
int reflect(int p, int n) {
  if (n == 1) return 0;
  if (p < 0) return -p;
  if (p >= n) return 2 * n - 2 - p;
  return p;
}

}  // namespace

ConvDenoiser::ConvDenoiser(std::vector<Layer> layers) : layers_(std::move(layers)) {}

ConvDenoiser ConvDenoiser::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw format_error("cannot open denoiser file: " + path);
  return load(in);
}

ConvDenoiser ConvDenoiser::load(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "DNW1", 4) != 0)
    throw format_error("bad denoiser magic");
  uint32_t n = read_u32(in, "layer count");
  if (n < 1 || n > 8) throw format_error("denoiser layer count out of range");
  std::vector<Layer> layers(n);
  for (uint32_t l = 0; l < n; ++l) {
    uint32_t ic = read_u32(in, "layer header");
    uint32_t oc = read_u32(in, "layer header");
    uint32_t ks = read_u32(in, "layer header");
    if (ks != 3) throw format_error("denoiser kernel size must be 3");
    if (ic < 1 || ic > 64 || oc < 1 || oc > 64)
      throw format_error("denoiser channel count out of range");
    if (l > 0 && static_cast<int>(ic) != layers[l - 1].out_ch)
      throw format_error("denoiser layer channel chain mismatch");
    Layer& ly = layers[l];
    ly.in_ch = static_cast<int>(ic);
    ly.out_ch = static_cast<int>(oc);
    read_f32s(in, ly.weights, static_cast<size_t>(ic) * oc * 9, "weights");
    read_f32s(in, ly.bias, oc, "bias");
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw format_error("denoiser payload size mismatch");
  return ConvDenoiser(std::move(layers));
}

ImageTensor ConvDenoiser::predict(const ImageTensor& x_t, int t,
                                  const NoiseSchedule& sched) const {
  int c = x_t.channels(), h = x_t.height(), w = x_t.width();
  if (layers_.front().in_ch != c + 1)
    throw std::invalid_argument("denoiser expects " +
                                std::to_string(layers_.front().in_ch - 1) +
                                "-channel images");
  if (layers_.back().out_ch != c)
    throw std::invalid_argument("denoiser output channels do not match image");
  size_t plane = static_cast<size_t>(h) * w;
  std::vector<double> cur(static_cast<size_t>(c + 1) * plane);
  std::copy(x_t.data().begin(), x_t.data().end(), cur.begin());
  double tv = static_cast<double>(t) / sched.steps();
  std::fill(cur.begin() + static_cast<ptrdiff_t>(c * plane), cur.end(), tv);

  for (size_t l = 0; l < layers_.size(); ++l) {
    const Layer& ly = layers_[l];
    std::vector<double> next(static_cast<size_t>(ly.out_ch) * plane);
    for (int oc = 0; oc < ly.out_ch; ++oc) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double acc = ly.bias[static_cast<size_t>(oc)];
          for (int ic = 0; ic < ly.in_ch; ++ic) {
            const double* wp =
                &ly.weights[(static_cast<size_t>(oc) * ly.in_ch + ic) * 9];
            const double* ip = &cur[static_cast<size_t>(ic) * plane];
            for (int ky = 0; ky < 3; ++ky) {
              int sy = reflect(y + ky - 1, h);
              for (int kx = 0; kx < 3; ++kx) {
                int sx = reflect(x + kx - 1, w);
                acc += wp[ky * 3 + kx] * ip[static_cast<size_t>(sy) * w + sx];
              }
            }
          }
          next[(static_cast<size_t>(oc) * h + y) * w + x] = acc;
        }
      }
    }
    if (l + 1 < layers_.size())
      for (double& v : next) v = std::max(v, 0.0);
    cur = std::move(next);
  }
  return ImageTensor::from_data(c, h, w, std::move(cur));
}

}  // namespace enh
