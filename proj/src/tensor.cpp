#include "enh/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace enh {

namespace {

void check_shape(int channels, int height, int width) {
  if (channels != 1 && channels != 3)
    throw std::invalid_argument("image channels must be 1 or 3");
  if (height < 1 || width < 1)
    throw std::invalid_argument("image dimensions must be positive");
  // Guards absurd allocations from corrupt headers.
  const std::uint64_t n =
      static_cast<std::uint64_t>(channels) * height * width;
  if (n > (1ull << 31))
    throw std::invalid_argument("image too large");
}

}  // namespace

ImageTensor::ImageTensor(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  check_shape(channels, height, width);
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

ImageTensor ImageTensor::from_data(int channels, int height, int width,
                                   std::vector<double> values) {
  check_shape(channels, height, width);
  if (values.size() != static_cast<std::size_t>(channels) * height * width)
    throw std::invalid_argument("value count does not match shape");
  ImageTensor out;
  out.channels_ = channels;
  out.height_ = height;
  out.width_ = width;
  out.data_ = std::move(values);
  return out;
}

bool ImageTensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

ImageTensor& operator+=(ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("shape mismatch in +=");
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
  return a;
}

ImageTensor& operator-=(ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("shape mismatch in -=");
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] -= b.data()[i];
  return a;
}

ImageTensor& operator*=(ImageTensor& a, double s) {
  for (double& v : a.data()) v *= s;
  return a;
}

ImageTensor operator+(ImageTensor a, const ImageTensor& b) { return a += b; }
ImageTensor operator-(ImageTensor a, const ImageTensor& b) { return a -= b; }
ImageTensor operator*(double s, ImageTensor a) { return a *= s; }

bool identical(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.data()[i] != b.data()[i]) return false;
  return true;
}

double mean_value(const ImageTensor& img) {
  if (img.empty()) throw std::invalid_argument("mean of empty image");
  double s = 0.0;
  for (double v : img.data()) s += v;
  return s / static_cast<double>(img.size());
}

ImageTensor channel_mean(const ImageTensor& img) {
  ImageTensor out(1, img.height(), img.width());
  const double inv = 1.0 / img.channels();
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      double s = 0.0;
      for (int c = 0; c < img.channels(); ++c) s += img.at(c, y, x);
      out.at(0, y, x) = s * inv;
    }
  return out;
}

namespace {

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

double RandomSource::next_uniform() {
  ++counter_;
  const std::uint64_t bits =
      mix64(seed_ + counter_ * 0x9E3779B97F4A7C15ull);
  // Top 53 bits, shifted into (0, 1] so log() below is always defined.
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

double RandomSource::next_gaussian() {
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

ImageTensor gaussian_noise(RandomSource& rng, int channels, int height,
                           int width) {
  ImageTensor out(channels, height, width);
  for (double& v : out.data()) v = rng.next_gaussian();
  return out;
}

ImageTensor resize_bilinear(const ImageTensor& img, int out_height,
                            int out_width) {
  if (img.empty()) throw std::invalid_argument("resize of empty image");
  if (out_height < 1 || out_width < 1)
    throw std::invalid_argument("resize target must be positive");
  ImageTensor out(img.channels(), out_height, out_width);
  const double sy = static_cast<double>(img.height()) / out_height;
  const double sx = static_cast<double>(img.width()) / out_width;
  for (int y = 0; y < out_height; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    const double wy = fy - y0;
    int y1 = std::clamp(y0 + 1, 0, img.height() - 1);
    y0 = std::clamp(y0, 0, img.height() - 1);
    for (int x = 0; x < out_width; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      const double wx = fx - x0;
      int x1 = std::clamp(x0 + 1, 0, img.width() - 1);
      x0 = std::clamp(x0, 0, img.width() - 1);
      for (int c = 0; c < img.channels(); ++c) {
        const double top =
            (1.0 - wx) * img.at(c, y0, x0) + wx * img.at(c, y0, x1);
        const double bot =
            (1.0 - wx) * img.at(c, y1, x0) + wx * img.at(c, y1, x1);
        out.at(c, y, x) = (1.0 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

ImageTensor crop_rect(const ImageTensor& img, int top, int left, int height,
                      int width) {
  if (height < 1 || width < 1)
    throw std::invalid_argument("crop size must be positive");
  if (top < 0 || left < 0 || top + height > img.height() ||
      left + width > img.width())
    throw std::invalid_argument("crop rect out of bounds");
  ImageTensor out(img.channels(), height, width);
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        out.at(c, y, x) = img.at(c, top + y, left + x);
  return out;
}

ImageTensor crop(const ImageTensor& img, const PatchRect& rect) {
  return crop_rect(img, rect.top, rect.left, rect.size, rect.size);
}

ImageTensor paste(const ImageTensor& base, const ImageTensor& patch,
                  const PatchRect& rect) {
  if (patch.channels() != base.channels() || patch.height() != rect.size ||
      patch.width() != rect.size)
    throw std::invalid_argument("patch shape does not match rect");
  if (rect.top < 0 || rect.left < 0 || rect.top + rect.size > base.height() ||
      rect.left + rect.size > base.width())
    throw std::invalid_argument("paste rect out of bounds");
  ImageTensor out = base;
  for (int c = 0; c < base.channels(); ++c)
    for (int y = 0; y < rect.size; ++y)
      for (int x = 0; x < rect.size; ++x)
        out.at(c, rect.top + y, rect.left + x) = patch.at(c, y, x);
  return out;
}

ImageTensor pad_edge(const ImageTensor& img, int out_height, int out_width) {
  if (out_height < img.height() || out_width < img.width())
    throw std::invalid_argument("pad target smaller than image");
  ImageTensor out(img.channels(), out_height, out_width);
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < out_height; ++y) {
      const int sy = std::min(y, img.height() - 1);
      for (int x = 0; x < out_width; ++x)
        out.at(c, y, x) = img.at(c, sy, std::min(x, img.width() - 1));
    }
  return out;
}

namespace {

void put_u32le(std::string& buf, std::uint32_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
  buf.push_back(static_cast<char>((v >> 16) & 0xff));
  buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_rtf1(const ImageTensor& img, const std::string& path) {
  if (img.empty()) throw std::invalid_argument("cannot write empty image");
  std::string buf;
  buf.reserve(16 + img.size() * 4);
  buf.append("RTF1", 4);
  put_u32le(buf, static_cast<std::uint32_t>(img.channels()));
  put_u32le(buf, static_cast<std::uint32_t>(img.height()));
  put_u32le(buf, static_cast<std::uint32_t>(img.width()));
  for (double v : img.data()) {
    const float f = static_cast<float>(v);
    char raw[4];
    std::memcpy(raw, &f, 4);
    buf.append(raw, 4);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

ImageTensor read_rtf1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 16) throw format_error("raw tensor file truncated: " + path);
  if (std::memcmp(buf.data(), "RTF1", 4) != 0)
    throw format_error("bad raw tensor magic: " + path);
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  const std::uint32_t c = get_u32le(p + 4);
  const std::uint32_t h = get_u32le(p + 8);
  const std::uint32_t w = get_u32le(p + 12);
  if (c != 1 && c != 3)
    throw format_error("raw tensor channels must be 1 or 3: " + path);
  if (h < 1 || w < 1 || static_cast<std::uint64_t>(c) * h * w > (1ull << 31))
    throw format_error("raw tensor dimensions invalid: " + path);
  const std::size_t n = static_cast<std::size_t>(c) * h * w;
  if (buf.size() != 16 + n * 4)
    throw format_error("raw tensor payload size mismatch: " + path);
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    float f;
    std::memcpy(&f, buf.data() + 16 + i * 4, 4);
    values[i] = static_cast<double>(f);
  }
  return ImageTensor::from_data(static_cast<int>(c), static_cast<int>(h),
                                static_cast<int>(w), std::move(values));
}

}  // namespace enh
