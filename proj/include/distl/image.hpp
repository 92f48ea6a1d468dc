#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "distl/common.hpp"

namespace distl {

// Single-channel image, row-major, intensities nominally in [0,1] once
// preprocessed. Raw loads may carry any finite range.
struct ImageTensor {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;  // height*width, row-major

  ImageTensor() = default;
  ImageTensor(int h, int w, double fill = 0.0)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

  double& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }
  double at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }
  std::size_t size() const { return pixels.size(); }
  bool empty() const { return pixels.empty(); }
};

inline bool all_finite(const ImageTensor& img) {
  for (double v : img.pixels) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// Bilinear resample to out_h x out_w (center-aligned sampling, clamped at the
// border). Output range is contained in the input range.
inline ImageTensor resize_bilinear(const ImageTensor& src, int out_h, int out_w) {
  if (src.empty() || out_h <= 0 || out_w <= 0) {
    throw InvalidInput("resize_bilinear: empty input or non-positive target size");
  }
  if (src.height == out_h && src.width == out_w) return src;
  ImageTensor dst(out_h, out_w);
  const double sy = static_cast<double>(src.height) / out_h;
  const double sx = static_cast<double>(src.width) / out_w;
  for (int r = 0; r < out_h; ++r) {
    double fy = (r + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int c = 0; c < out_w; ++c) {
      double fx = (c + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(src.width - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      const double top = src.at(y0, x0) * (1.0 - wx) + src.at(y0, x1) * wx;
      const double bot = src.at(y1, x0) * (1.0 - wx) + src.at(y1, x1) * wx;
      dst.at(r, c) = top * (1.0 - wy) + bot * wy;
    }
  }
  return dst;
}

// Bilinear sample at a real-valued location; out-of-frame reads return `pad`.
inline double sample_bilinear(const ImageTensor& img, double y, double x, double pad) {
  if (y <= -1.0 || x <= -1.0 || y >= img.height || x >= img.width) return pad;
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const double wy = y - y0;
  const double wx = x - x0;
  auto px = [&](int r, int c) -> double {
    if (r < 0 || c < 0 || r >= img.height || c >= img.width) return pad;
    return img.at(r, c);
  };
  const double top = px(y0, x0) * (1.0 - wx) + px(y0, x0 + 1) * wx;
  const double bot = px(y0 + 1, x0) * (1.0 - wx) + px(y0 + 1, x0 + 1) * wx;
  return top * (1.0 - wy) + bot * wy;
}

inline ImageTensor crop(const ImageTensor& src, int top, int left, int side) {
  if (top < 0 || left < 0 || side <= 0 || top + side > src.height || left + side > src.width) {
    throw InvalidInput("crop: window out of bounds");
  }
  ImageTensor dst(side, side);
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      dst.at(r, c) = src.at(top + r, left + c);
    }
  }
  return dst;
}

// --- PGM (P5) I/O: 8-bit or 16-bit grayscale, the ingestion raster format ---

inline void write_pgm(const std::string& path, const ImageTensor& img, int maxval = 255) {
  if (maxval != 255 && maxval != 65535) throw InvalidInput("write_pgm: maxval must be 255 or 65535");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("write_pgm: cannot open " + path);
  f << "P5\n" << img.width << " " << img.height << "\n" << maxval << "\n";
  for (double v : img.pixels) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    if (maxval == 255) {
      const auto q = static_cast<std::uint8_t>(std::lround(clamped * 255.0));
      f.put(static_cast<char>(q));
    } else {
      const auto q = static_cast<std::uint16_t>(std::lround(clamped * 65535.0));
      f.put(static_cast<char>(q >> 8));  // big-endian per Netpbm
      f.put(static_cast<char>(q & 0xff));
    }
  }
  if (!f) throw IoError("write_pgm: write failed for " + path);
}

namespace detail {
inline int pgm_next_int(std::istream& is) {
  // skips whitespace and '#' comments
  while (true) {
    int ch = is.peek();
    if (ch == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(ch)) {
      is.get();
    } else {
      break;
    }
  }
  int value = 0;
  is >> value;
  if (!is) throw IoError("read_pgm: malformed header");
  return value;
}
}  // namespace detail

// Loads an 8- or 16-bit P5 image scaled to [0,1].
inline ImageTensor read_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("read_pgm: cannot open " + path);
  std::string magic(2, '\0');
  f.read(magic.data(), 2);
  if (magic != "P5") throw IoError("read_pgm: not a binary PGM: " + path);
  const int w = detail::pgm_next_int(f);
  const int h = detail::pgm_next_int(f);
  const int maxval = detail::pgm_next_int(f);
  if (w <= 0 || h <= 0 || (maxval != 255 && maxval != 65535)) {
    throw IoError("read_pgm: unsupported PGM geometry/depth in " + path);
  }
  f.get();  // single whitespace after maxval
  ImageTensor img(h, w);
  if (maxval == 255) {
    std::vector<std::uint8_t> buf(img.size());
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("read_pgm: truncated pixel data in " + path);
    for (std::size_t i = 0; i < buf.size(); ++i) img.pixels[i] = buf[i] / 255.0;
  } else {
    std::vector<std::uint8_t> buf(img.size() * 2);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("read_pgm: truncated pixel data in " + path);
    for (std::size_t i = 0; i < img.size(); ++i) {
      img.pixels[i] = ((buf[2 * i] << 8) | buf[2 * i + 1]) / 65535.0;
    }
  }
  return img;
}

}  // namespace distl
