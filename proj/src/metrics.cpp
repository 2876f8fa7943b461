#include "enh/metrics.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace enh {

std::size_t BinaryMask::count() const {
  std::size_t n = 0;
  for (std::uint8_t v : values) n += v != 0;
  return n;
}

BinaryMask mask_from_image(const ImageTensor& img) {
  ImageTensor r = channel_mean(img);
  BinaryMask m{img.height(), img.width(), {}};
  m.values.resize(static_cast<std::size_t>(img.height()) * img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      m.values[static_cast<std::size_t>(y) * img.width() + x] =
          r.at(0, y, x) > 0.5 ? 1 : 0;
  return m;
}

namespace {

std::vector<double> lightness(const ImageTensor& img) {
  std::size_t n = static_cast<std::size_t>(img.height()) * img.width();
  std::vector<double> h(n);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      double v = img.at(0, y, x);
      for (int c = 1; c < img.channels(); ++c)
        v = std::max(v, img.at(c, y, x));
      h[static_cast<std::size_t>(y) * img.width() + x] = v;
    }
  return h;
}

}  // namespace

double loe(const ImageTensor& original, const ImageTensor& enhanced,
           int sample_cap) {
  if (original.height() != enhanced.height() ||
      original.width() != enhanced.width())
    throw std::invalid_argument("loe needs matching dimensions");
  if (sample_cap < 2) throw std::invalid_argument("sample_cap must be >= 2");
  std::vector<double> h = lightness(original);
  std::vector<double> hp = lightness(enhanced);
  std::size_t m = h.size();
  std::vector<std::size_t> idx;
  if (m > static_cast<std::size_t>(sample_cap)) {
    idx.resize(static_cast<std::size_t>(sample_cap));
    for (std::size_t i = 0; i < idx.size(); ++i)
      idx[i] = i * m / static_cast<std::size_t>(sample_cap);
  } else {
    idx.resize(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = i;
  }
  std::size_t total = 0;
  for (std::size_t a : idx) {
    std::size_t rod = 0;
    for (std::size_t b : idx) {
      bool ta = h[a] >= h[b];
      bool tb = hp[a] >= hp[b];
      rod += ta != tb;
    }
    total += rod;
  }
  return static_cast<double>(total) / static_cast<double>(idx.size());
}

double entropy(const ImageTensor& img) {
  ImageTensor r = channel_mean(img);
  std::size_t hist[256] = {};
  const std::vector<double>& v = r.data();
  for (double x : v) {
    double c = std::min(1.0, std::max(0.0, x));
    int bin = std::min(255, static_cast<int>(c * 256.0));
    hist[bin] += 1;
  }
  double n = static_cast<double>(v.size());
  double h = 0.0;
  for (std::size_t b : hist) {
    if (b == 0) continue;
    double p = static_cast<double>(b) / n;
    h -= p * std::log2(p);
  }
  return h;
}

BinaryMask dilate_disk(const BinaryMask& mask, int radius) {
  if (radius < 0) throw std::invalid_argument("radius must be >= 0");
  std::vector<std::pair<int, int>> disk;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) disk.emplace_back(dy, dx);
  BinaryMask out{mask.height, mask.width, {}};
  out.values.assign(mask.values.size(), 0);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(y, x)) continue;
      for (auto [dy, dx] : disk) {
        int yy = y + dy, xx = x + dx;
        if (yy < 0 || yy >= mask.height || xx < 0 || xx >= mask.width) continue;
        out.values[static_cast<std::size_t>(yy) * mask.width + xx] = 1;
      }
    }
  return out;
}

double snr_dilated(const ImageTensor& img, const BinaryMask& signal,
                   int radius, bool linear_ratio) {
  if (signal.height != img.height() || signal.width != img.width())
    throw std::invalid_argument("signal mask dimensions mismatch");
  ImageTensor r = channel_mean(img);
  BinaryMask grown = dilate_disk(signal, radius);

  double sig_sum = 0.0;
  std::size_t sig_n = 0;
  double bg_sum = 0.0, bg_sq = 0.0;
  std::size_t bg_n = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      double v = r.at(0, y, x);
      if (signal.at(y, x)) {
        sig_sum += v;
        ++sig_n;
      } else if (grown.at(y, x)) {
        bg_sum += v;
        bg_sq += v * v;
        ++bg_n;
      }
    }
  if (sig_n == 0) throw std::invalid_argument("signal mask is empty");
  if (bg_n == 0) throw std::invalid_argument("background region is empty");
  double mu = sig_sum / static_cast<double>(sig_n);
  double bmu = bg_sum / static_cast<double>(bg_n);
  double var = bg_sq / static_cast<double>(bg_n) - bmu * bmu;
  if (var <= 0.0) return 99.0;  // saturation for a flat background
  double ratio = mu * mu / var;
  return linear_ratio ? ratio : 10.0 * std::log10(ratio);
}

OverlapMetrics overlap_metrics(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw std::invalid_argument("mask dimensions mismatch");
  std::size_t inter = 0, pn = 0, gn = 0, agree = 0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    bool p = pred.values[i] != 0;
    bool g = gt.values[i] != 0;
    inter += p && g;
    pn += p;
    gn += g;
    agree += p == g;
  }
  OverlapMetrics m;
  m.pa = static_cast<double>(agree) / static_cast<double>(pred.values.size());
  std::size_t uni = pn + gn - inter;
  m.iou = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  m.dice = pn + gn == 0
               ? 1.0
               : 2.0 * static_cast<double>(inter) /
                     static_cast<double>(pn + gn);
  return m;
}

}  // namespace enh
