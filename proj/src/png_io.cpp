#include "enh/png_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace enh {

namespace {

const unsigned char kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

void put_u32be(std::vector<unsigned char>& buf, std::uint32_t v) {
  buf.push_back(static_cast<unsigned char>(v >> 24));
  buf.push_back(static_cast<unsigned char>(v >> 16));
  buf.push_back(static_cast<unsigned char>(v >> 8));
  buf.push_back(static_cast<unsigned char>(v));
}

std::uint32_t get_u32be(const unsigned char* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) |
         (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

void append_chunk(std::vector<unsigned char>& out, const char type[4],
                  const std::vector<unsigned char>& payload) {
  put_u32be(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t type_pos = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const auto crc = crc32(
      crc32(0L, Z_NULL, 0), out.data() + type_pos,
      static_cast<uInt>(4 + payload.size()));
  put_u32be(out, static_cast<std::uint32_t>(crc));
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

void write_png(const ImageTensor& img, const std::string& path) {
  if (img.empty()) throw std::invalid_argument("cannot write empty image");
  const int ch = img.channels();
  const int h = img.height(), w = img.width();

  // Interleaved 8-bit scanlines, filter byte 0 (None) per row.
  std::vector<unsigned char> raw((1 + static_cast<std::size_t>(w) * ch) * h);
  std::size_t pos = 0;
  for (int y = 0; y < h; ++y) {
    raw[pos++] = 0;
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        const double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        raw[pos++] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
  }

  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> zdata(zlen);
  if (compress2(zdata.data(), &zlen, raw.data(),
                static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw std::runtime_error("png deflate failed");
  zdata.resize(zlen);

  std::vector<unsigned char> ihdr;
  put_u32be(ihdr, static_cast<std::uint32_t>(w));
  put_u32be(ihdr, static_cast<std::uint32_t>(h));
  ihdr.push_back(8);                          // bit depth
  ihdr.push_back(ch == 1 ? 0 : 2);            // gray or rgb
  ihdr.push_back(0);                          // compression
  ihdr.push_back(0);                          // filter method
  ihdr.push_back(0);                          // no interlace

  std::vector<unsigned char> file(kSignature, kSignature + 8);
  append_chunk(file, "IHDR", ihdr);
  append_chunk(file, "IDAT", zdata);
  append_chunk(file, "IEND", {});

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(file.data()),
            static_cast<std::streamsize>(file.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

ImageTensor read_png(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<unsigned char> file((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (file.size() < 8 || std::memcmp(file.data(), kSignature, 8) != 0)
    throw format_error("not a png file: " + path);

  std::uint32_t w = 0, h = 0;
  int color_type = -1;
  std::vector<unsigned char> zdata;
  bool saw_ihdr = false, saw_iend = false;

  std::size_t pos = 8;
  while (pos + 12 <= file.size() && !saw_iend) {
    const std::uint32_t len = get_u32be(&file[pos]);
    if (pos + 12 + static_cast<std::size_t>(len) > file.size())
      throw format_error("png chunk truncated: " + path);
    const char* type = reinterpret_cast<const char*>(&file[pos + 4]);
    const unsigned char* payload = &file[pos + 8];
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw format_error("png header malformed: " + path);
      w = get_u32be(payload);
      h = get_u32be(payload + 4);
      const int depth = payload[8];
      color_type = payload[9];
      if (depth != 8)
        throw format_error("unsupported png bit depth: " + path);
      if (color_type != 0 && color_type != 2)
        throw format_error("unsupported png color type: " + path);
      if (payload[10] != 0 || payload[11] != 0 || payload[12] != 0)
        throw format_error("unsupported png encoding options: " + path);
      saw_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      if (!saw_ihdr) throw format_error("png data before header: " + path);
      zdata.insert(zdata.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_iend = true;
    }
    pos += 12 + len;
  }
  if (!saw_ihdr || !saw_iend || zdata.empty())
    throw format_error("png missing required chunks: " + path);
  if (w < 1 || h < 1 || static_cast<std::uint64_t>(w) * h > (1ull << 30))
    throw format_error("png dimensions invalid: " + path);

  const int ch = color_type == 0 ? 1 : 3;
  const std::size_t stride = 1 + static_cast<std::size_t>(w) * ch;
  std::vector<unsigned char> raw(stride * h);
  uLongf rawlen = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &rawlen, zdata.data(),
                 static_cast<uLong>(zdata.size())) != Z_OK ||
      rawlen != raw.size())
    throw format_error("png inflate failed: " + path);

  // Undo per-row filters in place; prev points at the reconstructed row above.
  const int bpp = ch;
  for (std::uint32_t y = 0; y < h; ++y) {
    unsigned char* row = &raw[y * stride];
    const unsigned char filter = row[0];
    unsigned char* cur = row + 1;
    const unsigned char* prev = y > 0 ? &raw[(y - 1) * stride] + 1 : nullptr;
    const std::size_t n = static_cast<std::size_t>(w) * ch;
    switch (filter) {
      case 0:
        break;
      case 1:
        for (std::size_t i = bpp; i < n; ++i) cur[i] += cur[i - bpp];
        break;
      case 2:
        if (prev)
          for (std::size_t i = 0; i < n; ++i) cur[i] += prev[i];
        break;
      case 3:
        for (std::size_t i = 0; i < n; ++i) {
          const int left = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
          const int up = prev ? prev[i] : 0;
          cur[i] += static_cast<unsigned char>((left + up) / 2);
        }
        break;
      case 4:
        for (std::size_t i = 0; i < n; ++i) {
          const int left = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
          const int up = prev ? prev[i] : 0;
          const int ul =
              (prev && i >= static_cast<std::size_t>(bpp)) ? prev[i - bpp] : 0;
          cur[i] += static_cast<unsigned char>(paeth(left, up, ul));
        }
        break;
      default:
        throw format_error("png filter type invalid: " + path);
    }
  }

  ImageTensor out(ch, static_cast<int>(h), static_cast<int>(w));
  for (std::uint32_t y = 0; y < h; ++y) {
    const unsigned char* cur = &raw[y * stride] + 1;
    for (std::uint32_t x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c)
        out.at(c, static_cast<int>(y), static_cast<int>(x)) =
            cur[x * ch + c] / 255.0;
  }
  return out;
}

ImageTensor load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw format_error("cannot open image: " + path);
  char head[4] = {};
  in.read(head, 4);
  in.close();
  static const unsigned char png_sig[4] = {0x89, 'P', 'N', 'G'};
  if (std::memcmp(head, png_sig, 4) == 0) return read_png(path);
  if (std::memcmp(head, "RTF1", 4) == 0) return read_rtf1(path);
  throw format_error("unrecognized image format: " + path);
}

void save_image(const ImageTensor& img, const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".png") == 0)
    write_png(img, path);
  else
    write_rtf1(img, path);
}

}  // namespace enh
