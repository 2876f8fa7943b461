#pragma once

#include <string>

#include "enh/tensor.hpp"

namespace enh {

// Minimal PNG support for human-facing I/O: 8-bit depth, grayscale or RGB,
// no interlacing. Values are clamped to [0, 1] and quantized to 8 bits on
// write; reads return values in [0, 1]. Everything else stays double
// precision, so PNG is a lossy boundary by design.
void write_png(const ImageTensor& img, const std::string& path);
ImageTensor read_png(const std::string& path);

// Dispatch on content (load sniffs the PNG signature vs the raw-tensor
// magic) and on extension (save picks PNG for .png, raw tensor otherwise).
ImageTensor load_image(const std::string& path);
void save_image(const ImageTensor& img, const std::string& path);

}  // namespace enh
