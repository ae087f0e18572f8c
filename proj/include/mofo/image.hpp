#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mofo/common.hpp"

namespace mofo {

template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> data;  // row-major, data[y * width + x]

  Image() = default;
  Image(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("image dimensions must be positive");
  }

  T& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return data.size(); }
  bool same_dims(const Image& o) const { return width == o.width && height == o.height; }
};

// Grayscale frame, luma in [0,1].
using Frame = Image<float>;

inline void validate_frame(const Frame& f) {
  if (f.width < 8 || f.height < 8)
    throw std::invalid_argument("frame must be at least 8x8, got " + std::to_string(f.width) +
                                "x" + std::to_string(f.height));
  for (float v : f.data) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
      throw std::invalid_argument("frame intensities must be finite and within [0,1]");
  }
}

namespace detail {

// Separable Gaussian blur, replicate-edge padding, double accumulation.
template <typename T>
Image<T> gaussian_blur(const Image<T>& src, double sigma, int radius) {
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double w = std::exp(-(static_cast<double>(k) * k) / (2.0 * sigma * sigma));
    kernel[static_cast<std::size_t>(k + radius)] = w;
    sum += w;
  }
  for (double& w : kernel) w /= sum;

  const int W = src.width, H = src.height;
  Image<double> tmp(W, H);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int xx = std::clamp(x + k, 0, W - 1);
        acc += kernel[static_cast<std::size_t>(k + radius)] * src.at(xx, y);
      }
      tmp.at(x, y) = acc;
    }
  }
  Image<T> out(W, H);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int yy = std::clamp(y + k, 0, H - 1);
        acc += kernel[static_cast<std::size_t>(k + radius)] * tmp.at(x, yy);
      }
      out.at(x, y) = static_cast<T>(acc);
    }
  }
  return out;
}

// Bilinear sample with clamp-to-edge.
template <typename T>
double sample_bilinear(const Image<T>& img, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0, fy = y - y0;
  const double a = img.at(x0, y0), b = img.at(x1, y0);
  const double c = img.at(x0, y1), d = img.at(x1, y1);
  return (1 - fy) * ((1 - fx) * a + fx * b) + fy * ((1 - fx) * c + fx * d);
}

inline int skip_pnm_whitespace(std::istream& is, std::size_t& offset) {
  int c = is.get();
  while (c != EOF) {
    ++offset;
    if (c == '#') {  // comment runs to end of line
      while (c != EOF && c != '\n') {
        c = is.get();
        if (c != EOF) ++offset;
      }
    } else if (!std::isspace(c)) {
      return c;
    }
    c = is.get();
  }
  return EOF;
}

inline long read_pnm_int(std::istream& is, std::size_t& offset, const std::string& what) {
  int c = skip_pnm_whitespace(is, offset);
  if (c == EOF || !std::isdigit(c)) throw FormatError("expected " + what + " in PNM header", offset);
  long v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    c = is.get();
    if (c != EOF) ++offset;
  }
  // the digit run must be terminated by whitespace already consumed above
  return v;
}

}  // namespace detail

// Reads binary PGM (P5) or PPM (P6), maxval 255. PPM is converted to luma
// with Rec.601 weights. Intensities are scaled to [0,1].
inline Frame read_pnm(std::istream& is, const std::string& name = "<stream>") {
  std::size_t offset = 0;
  int m0 = is.get();
  int m1 = is.get();
  offset += 2;
  if (m0 != 'P' || (m1 != '5' && m1 != '6'))
    throw FormatError(name + ": not a binary PGM/PPM (expected P5 or P6 magic)", 0);
  const bool color = (m1 == '6');
  const long w = detail::read_pnm_int(is, offset, "width");
  const long h = detail::read_pnm_int(is, offset, "height");
  const long maxval = detail::read_pnm_int(is, offset, "maxval");
  if (w <= 0 || h <= 0) throw FormatError(name + ": non-positive dimensions", offset);
  if (maxval != 255) throw FormatError(name + ": unsupported maxval " + std::to_string(maxval), offset);

  const std::size_t channels = color ? 3 : 1;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels;
  std::vector<unsigned char> raw(n);
  if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n)))
    throw FormatError(name + ": truncated pixel payload", offset + static_cast<std::size_t>(is.gcount()));

  Frame f(static_cast<int>(w), static_cast<int>(h));
  if (color) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double r = raw[3 * i], g = raw[3 * i + 1], b = raw[3 * i + 2];
      f.data[i] = static_cast<float>((0.299 * r + 0.587 * g + 0.114 * b) / 255.0);
    }
  } else {
    for (std::size_t i = 0; i < f.size(); ++i) f.data[i] = raw[i] / 255.0f;
  }
  return f;
}

inline Frame read_pnm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_pnm(is, path.filename().string());
}

// Writes a [0,1] image as binary PGM, maxval 255.
inline void write_pgm(std::ostream& os, const Image<float>& img) {
  os << "P5\n" << img.width << " " << img.height << "\n255\n";
  for (float v : img.data) {
    const int q = static_cast<int>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    os.put(static_cast<char>(q));
  }
}

inline void write_pgm(const std::filesystem::path& path, const Image<float>& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_pgm(os, img);
}

// Raw float dump: u32 width, u32 height, then width*height float32, all little-endian.
inline void write_rawf32(std::ostream& os, const Image<float>& img) {
  detail::put_u32le(os, static_cast<std::uint32_t>(img.width));
  detail::put_u32le(os, static_cast<std::uint32_t>(img.height));
  for (float v : img.data) detail::put_f32le(os, v);
}

inline void write_rawf32(const std::filesystem::path& path, const Image<float>& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_rawf32(os, img);
}

inline Image<float> read_rawf32(std::istream& is, const std::string& name = "<stream>") {
  std::uint32_t w = 0, h = 0;
  if (!detail::get_u32le(is, w) || !detail::get_u32le(is, h))
    throw FormatError(name + ": truncated raw float header", 0);
  if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20))
    throw FormatError(name + ": implausible raw float dimensions", 0);
  Image<float> img(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (!detail::get_f32le(is, img.data[i]))
      throw FormatError(name + ": truncated raw float payload", 8 + 4 * i);
  }
  return img;
}

inline Image<float> read_rawf32(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_rawf32(is, path.filename().string());
}

}  // namespace mofo
