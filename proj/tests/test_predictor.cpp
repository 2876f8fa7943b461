#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "enh/predictor.hpp"
#include "enh/schedule.hpp"
#include "oracles.hpp"

using enh::ConvDenoiser;
using enh::GaussianPredictor;
using enh::ImageTensor;
using enh::MixturePredictor;
using enh::NoiseSchedule;

namespace {

ImageTensor single_pixel(double v) {
  ImageTensor img(1, 1, 1);
  img.at(0, 0, 0) = v;
  return img;
}

// E[eps | x_t] for a scalar mixture prior, by quadrature over x0. The
// likelihood x_t | x0 ~ N(sqrt(ab) x0, 1-ab); eps = (x_t - sqrt(ab) x0)/
// sqrt(1-ab). Integrates the posterior numerator and normalizer separately.
double quadrature_eps(const std::vector<double>& means,
                      const std::vector<double>& weights, double sigma0,
                      double xt, int t, const NoiseSchedule& s) {
  double ab = s.alpha_bar(t);
  double om = s.one_minus_alpha_bar(t);
  double sab = std::sqrt(ab);
  double som = std::sqrt(om);
  auto joint = [&](double x0) {
    double prior = 0.0;
    for (std::size_t k = 0; k < means.size(); ++k) {
      double z = (x0 - means[k]) / sigma0;
      prior += weights[k] * std::exp(-0.5 * z * z);
    }
    double r = (xt - sab * x0) / som;
    return prior * std::exp(-0.5 * r * r);
  };
  double lo = xt / sab, hi = lo;
  for (double m : means) {
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  lo -= 12.0 * (sigma0 + 1.0);
  hi += 12.0 * (sigma0 + 1.0);
  const int n = 80000;
  double z = oracle::simpson(joint, lo, hi, n);
  double num = oracle::simpson(
      [&](double x0) { return joint(x0) * (xt - sab * x0) / som; }, lo, hi, n);
  return num / z;
}

// DNW1 serializer for hand-built test weights.
void write_dnw1(const std::string& path,
                const std::vector<ConvDenoiser::Layer>& layers) {
  std::ofstream out(path, std::ios::binary);
  out.write("DNW1", 4);
  std::uint32_t n = static_cast<std::uint32_t>(layers.size());
  out.write(reinterpret_cast<const char*>(&n), 4);
  for (const ConvDenoiser::Layer& l : layers) {
    std::uint32_t hdr[3] = {static_cast<std::uint32_t>(l.in_ch),
                            static_cast<std::uint32_t>(l.out_ch), 3};
    out.write(reinterpret_cast<const char*>(hdr), 12);
    for (double w : l.weights) {
      float f = static_cast<float>(w);
      out.write(reinterpret_cast<const char*>(&f), 4);
    }
    for (double b : l.bias) {
      float f = static_cast<float>(b);
      out.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
}

}  // namespace

TEST_CASE("gaussian predictor point-mass cases") {
  NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
  GaussianPredictor p(0.25, 0.0);
  int t = 600;
  double sab = std::sqrt(s.alpha_bar(t));

  // x_t exactly at the scaled mean: no noise to explain.
  ImageTensor at_mean = single_pixel(sab * 0.25);
  CHECK(p.predict(at_mean, t, s).at(0, 0, 0) ==
        doctest::Approx(0.0).epsilon(1e-12));

  // Any deviation is attributed entirely to noise.
  ImageTensor off = single_pixel(0.9);
  double want = (0.9 - sab * 0.25) / std::sqrt(s.one_minus_alpha_bar(t));
  CHECK(p.predict(off, t, s).at(0, 0, 0) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("standard-normal prior gives eps = x_t sqrt(1-ab)") {
  NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
  GaussianPredictor p(0.0, 1.0);
  for (int t : {1, 500, 1000}) {
    double so = std::sqrt(s.one_minus_alpha_bar(t));
    for (double x : {-1.3, 0.2, 2.0}) {
      double got = p.predict(single_pixel(x), t, s).at(0, 0, 0);
      CHECK(got == doctest::Approx(x * so).epsilon(1e-12));
    }
  }
}

TEST_CASE("gaussian predictor matches quadrature") {
  NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
  GaussianPredictor p(0.3, 0.7);
  for (int t : {1, 500, 1000})
    for (double x : {-0.9, 0.1, 1.2}) {
      double got = p.predict(single_pixel(x), t, s).at(0, 0, 0);
      double want = quadrature_eps({0.3}, {1.0}, 0.7, x, t, s);
      CHECK(std::abs(got - want) < 1e-8);
    }
}

TEST_CASE("huge-sigma prior follows the exact closed form") {
  NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
  double sigma = 1e3;
  GaussianPredictor p(0.0, sigma);
  int t = 500;
  double ab = s.alpha_bar(t);
  double om = s.one_minus_alpha_bar(t);
  // At mu0 = 0 the noise estimate is linear: eps = x_t sqrt(om)/(ab sigma^2 + om).
  double coef = std::sqrt(om) / (ab * sigma * sigma + om);
  double xt = 0.8;
  double got = p.predict(single_pixel(xt), t, s).at(0, 0, 0);
  CHECK(got == doctest::Approx(coef * xt).epsilon(1e-12));
}

TEST_CASE("one-component mixture reduces to the gaussian predictor") {
  NoiseSchedule s = NoiseSchedule::linear(100, 1e-4, 0.02);
  GaussianPredictor g(0.4, 0.6);
  MixturePredictor m(std::vector<double>{0.4}, {1.0}, 0.6);
  ImageTensor x = oracle::random_image(3, 4, 4, 17, -1.5, 1.5);
  for (int t : {1, 50, 100}) {
    ImageTensor a = g.predict(x, t, s);
    ImageTensor b = m.predict(x, t, s);
    CHECK(oracle::max_abs_diff(a, b) < 1e-12);
  }
}

TEST_CASE("symmetric mixture at the origin predicts zero noise") {
  NoiseSchedule s = NoiseSchedule::linear(100, 1e-4, 0.02);
  MixturePredictor m(std::vector<double>{-0.7, 0.7}, {0.5, 0.5}, 0.3);
  ImageTensor zero(1, 1, 1);
  for (int t : {1, 50, 100})
    CHECK(std::abs(m.predict(zero, t, s).at(0, 0, 0)) < 1e-14);
}

TEST_CASE("mixture predictor matches quadrature") {
  NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
  MixturePredictor m(std::vector<double>{-0.5, 0.8}, {0.4, 0.6}, 0.35);
  for (int t : {1, 500, 1000})
    for (double x : {-0.9, 0.1, 1.2}) {
      double got = m.predict(single_pixel(x), t, s).at(0, 0, 0);
      double want = quadrature_eps({-0.5, 0.8}, {0.4, 0.6}, 0.35, x, t, s);
      CHECK(std::abs(got - want) < 1e-8);
    }
}

TEST_CASE("mixture responsibilities sum to one") {
  NoiseSchedule s = NoiseSchedule::linear(100, 1e-4, 0.02);
  MixturePredictor m(std::vector<double>{-0.5, 0.2, 0.9}, {0.2, 0.5, 0.3}, 0.4);
  for (int t : {1, 37, 100}) {
    ImageTensor x = oracle::random_image(1, 3, 3, 500 + t, -2.0, 2.0);
    std::vector<double> r = m.responsibilities(x, t, s);
    double sum = 0.0;
    for (double v : r) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("mixture with image means interpolates between them") {
  NoiseSchedule s = NoiseSchedule::linear(100, 1e-4, 0.02);
  ImageTensor m1(1, 2, 2, 0.2);
  ImageTensor m2(1, 2, 2, 0.9);
  MixturePredictor mi({m1, m2}, {0.5, 0.5}, 0.25);
  MixturePredictor ms(std::vector<double>{0.2, 0.9}, {0.5, 0.5}, 0.25);
  ImageTensor x = oracle::random_image(1, 2, 2, 912, -1.0, 1.0);
  for (int t : {1, 60, 100})
    CHECK(oracle::max_abs_diff(mi.predict(x, t, s), ms.predict(x, t, s)) <
          1e-13);
}

TEST_CASE("mixture rejects bad weights") {
  CHECK_THROWS_AS(MixturePredictor(std::vector<double>{0.1, 0.2}, {0.5}, 0.3),
                  std::invalid_argument);
  CHECK_THROWS_AS(MixturePredictor(std::vector<double>{0.1}, {-1.0}, 0.3),
                  std::invalid_argument);
  CHECK_THROWS_AS(MixturePredictor(std::vector<double>{}, {}, 0.3),
                  std::invalid_argument);
}

TEST_CASE("denoiser with zero weights emits the bias pattern") {
  oracle::TmpDir tmp("dnw");
  ConvDenoiser::Layer l;
  l.in_ch = 2;  // gray image + timestep channel
  l.out_ch = 1;
  l.weights.assign(2 * 1 * 9, 0.0);
  l.bias.assign(1, 0.0);
  std::string path = tmp.file("zero.dnw1");
  write_dnw1(path, {l});
  ConvDenoiser d = ConvDenoiser::load(path);

  NoiseSchedule s = NoiseSchedule::linear(10, 1e-4, 0.02);
  ImageTensor x = oracle::random_image(1, 4, 4, 3);
  ImageTensor out = d.predict(x, 5, s);
  for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("denoiser zero final layer kills an identity first layer") {
  oracle::TmpDir tmp("dnw");
  ConvDenoiser::Layer first;
  first.in_ch = 2;
  first.out_ch = 4;
  first.weights.assign(2 * 4 * 9, 0.0);
  for (int o = 0; o < 4; ++o) first.weights[(o * 2 + 0) * 9 + 4] = 1.0;
  first.bias.assign(4, 0.0);
  ConvDenoiser::Layer last;
  last.in_ch = 4;
  last.out_ch = 1;
  last.weights.assign(4 * 1 * 9, 0.0);
  last.bias.assign(1, 0.0);
  std::string path = tmp.file("id.dnw1");
  write_dnw1(path, {first, last});
  ConvDenoiser d = ConvDenoiser::load(path);

  NoiseSchedule s = NoiseSchedule::linear(10, 1e-4, 0.02);
  ImageTensor x = oracle::random_image(1, 5, 5, 4);
  ImageTensor out = d.predict(x, 3, s);
  for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("hand-built single-layer convolution on a 4x4 ramp") {
  oracle::TmpDir tmp("dnw");
  // Kernel picks out the east neighbor of the image channel; timestep
  // channel weighted by 10 so its contribution is visible.
  ConvDenoiser::Layer l;
  l.in_ch = 2;
  l.out_ch = 1;
  l.weights.assign(2 * 9, 0.0);
  l.weights[5] = 1.0;       // image channel, (ky=1, kx=2)
  l.weights[9 + 4] = 10.0;  // timestep channel, center tap
  l.bias.assign(1, 0.25);
  std::string path = tmp.file("hand.dnw1");
  write_dnw1(path, {l});
  ConvDenoiser d = ConvDenoiser::load(path);

  NoiseSchedule s = NoiseSchedule::linear(10, 1e-4, 0.02);
  ImageTensor x = oracle::ramp_image(1, 4, 4);
  int t = 5;
  ImageTensor out = d.predict(x, t, s);
  double tch = static_cast<double>(t) / 10.0;
  for (int y = 0; y < 4; ++y)
    for (int xx = 0; xx < 4; ++xx) {
      // reflect-101: east neighbor of the last column reflects back to x-1.
      int sx = xx + 1 < 4 ? xx + 1 : 2;
      float want = static_cast<float>(x.at(0, y, sx)) +
                   10.0f * static_cast<float>(tch) + 0.25f;
      CHECK(out.at(0, y, xx) ==
            doctest::Approx(static_cast<double>(want)).epsilon(1e-6));
    }
}

TEST_CASE("denoiser loader rejects malformed files distinctly") {
  oracle::TmpDir tmp("dnwbad");

  auto write_raw = [&](const std::string& name, const std::string& bytes) {
    std::string p = tmp.file(name);
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    return p;
  };

  std::string p1 = write_raw("magic.dnw1", "XXXX\x01\x00\x00\x00");
  CHECK_THROWS_WITH_AS(ConvDenoiser::load(p1), "bad denoiser magic",
                       enh::format_error);

  std::string p2 = write_raw("trunc.dnw1", "DNW1\x01");
  CHECK_THROWS_AS(ConvDenoiser::load(p2), enh::format_error);

  // Valid header, missing parameter payload.
  std::string bytes = "DNW1";
  std::uint32_t one = 1, two = 2, three = 3;
  bytes.append(reinterpret_cast<const char*>(&one), 4);
  bytes.append(reinterpret_cast<const char*>(&two), 4);
  bytes.append(reinterpret_cast<const char*>(&one), 4);
  bytes.append(reinterpret_cast<const char*>(&three), 4);
  std::string p3 = write_raw("short.dnw1", bytes);
  CHECK_THROWS_AS(ConvDenoiser::load(p3), enh::format_error);

  // Chain mismatch across layers.
  ConvDenoiser::Layer a;
  a.in_ch = 2;
  a.out_ch = 3;
  a.weights.assign(2 * 3 * 9, 0.0);
  a.bias.assign(3, 0.0);
  ConvDenoiser::Layer b;
  b.in_ch = 5;  // should be 3
  b.out_ch = 1;
  b.weights.assign(5 * 1 * 9, 0.0);
  b.bias.assign(1, 0.0);
  std::string p4 = tmp.file("chain.dnw1");
  write_dnw1(p4, {a, b});
  CHECK_THROWS_WITH_AS(ConvDenoiser::load(p4),
                       "denoiser layer channel chain mismatch",
                       enh::format_error);

  // Trailing garbage after a valid payload.
  ConvDenoiser::Layer ok;
  ok.in_ch = 2;
  ok.out_ch = 1;
  ok.weights.assign(2 * 9, 0.0);
  ok.bias.assign(1, 0.0);
  std::string p5 = tmp.file("extra.dnw1");
  write_dnw1(p5, {ok});
  {
    std::ofstream app(p5, std::ios::binary | std::ios::app);
    app << "junk";
  }
  CHECK_THROWS_WITH_AS(ConvDenoiser::load(p5), "denoiser payload size mismatch",
                       enh::format_error);
}

TEST_CASE("denoiser validates runtime channel agreement") {
  oracle::TmpDir tmp("dnwch");
  ConvDenoiser::Layer l;
  l.in_ch = 4;  // expects a 3-channel image
  l.out_ch = 3;
  l.weights.assign(4 * 3 * 9, 0.0);
  l.bias.assign(3, 0.0);
  std::string path = tmp.file("rgb.dnw1");
  write_dnw1(path, {l});
  ConvDenoiser d = ConvDenoiser::load(path);
  NoiseSchedule s = NoiseSchedule::linear(10, 1e-4, 0.02);
  ImageTensor gray(1, 4, 4, 0.5);
  CHECK_THROWS_AS(d.predict(gray, 5, s), std::invalid_argument);
}
