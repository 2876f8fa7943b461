#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "enh/common.hpp"

namespace enh {

// Planar channel-major image: data[(c*H + y)*W + x]. Channels is 1 (gray) or
// 3 (rgb). Values are double end to end; quantization happens only at the
// 8-bit PNG boundary and the float32 raw-tensor boundary.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int channels, int height, int width, double fill = 0.0);
  static ImageTensor from_data(int channels, int height, int width,
                               std::vector<double> values);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }
  double& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool same_shape(const ImageTensor& other) const {
    return channels_ == other.channels_ && height_ == other.height_ &&
           width_ == other.width_;
  }
  bool all_finite() const;

 private:
  int channels_ = 0, height_ = 0, width_ = 0;
  std::vector<double> data_;
};

ImageTensor& operator+=(ImageTensor& a, const ImageTensor& b);
ImageTensor& operator-=(ImageTensor& a, const ImageTensor& b);
ImageTensor& operator*=(ImageTensor& a, double s);
ImageTensor operator+(ImageTensor a, const ImageTensor& b);
ImageTensor operator-(ImageTensor a, const ImageTensor& b);
ImageTensor operator*(double s, ImageTensor a);

// Exact equality of shape and every element (values, not bit patterns).
bool identical(const ImageTensor& a, const ImageTensor& b);

double mean_value(const ImageTensor& img);

// Per-pixel mean over channels, returned as a 1-channel image.
ImageTensor channel_mean(const ImageTensor& img);

// Square axis-aligned region; `size` is the side length.
struct PatchRect {
  int top = 0;
  int left = 0;
  int size = 0;
};

// Counter-based deterministic generator. The n-th uniform is
// mix64(seed + (n+1)*0x9E3779B97F4A7C15) scaled to (0, 1], where mix64 is the
// splitmix64 finalizer. Gaussians come from the Box-Muller cosine branch and
// consume exactly two uniforms each, so draw n is a pure function of
// (seed, 2n). Identical seeds give identical streams within one build.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed) {}

  double next_uniform();   // (0, 1]
  double next_gaussian();  // N(0, 1)

  // Sub-stream for a parallel worker; never share one source across workers.
  RandomSource for_worker(std::uint64_t worker_index) const {
    return RandomSource(seed_ ^ worker_index);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

// Fills element (c, y, x) in channel-major order from the stream.
ImageTensor gaussian_noise(RandomSource& rng, int channels, int height,
                           int width);

// Bilinear resize with half-pixel centers: output column j samples source
// coordinate (j + 0.5) * w_in / w_out - 0.5 (same for rows), with neighbor
// indices clamped to the valid range at the borders.
ImageTensor resize_bilinear(const ImageTensor& img, int out_height,
                            int out_width);

ImageTensor crop(const ImageTensor& img, const PatchRect& rect);
ImageTensor crop_rect(const ImageTensor& img, int top, int left, int height,
                      int width);

// Returns a copy of `base` with `patch` written at `rect`.
ImageTensor paste(const ImageTensor& base, const ImageTensor& patch,
                  const PatchRect& rect);

// Grows an image to out_height x out_width by replicating the last row and
// column (bottom/right padding). Inverse of crop_rect(.., 0, 0, h, w).
ImageTensor pad_edge(const ImageTensor& img, int out_height, int out_width);

// Raw tensor file: magic "RTF1", then u32le channels/height/width, then
// float32le data in channel-major order. Doubles are narrowed to float on
// write and widened back on read.
void write_rtf1(const ImageTensor& img, const std::string& path);
ImageTensor read_rtf1(const std::string& path);

}  // namespace enh
