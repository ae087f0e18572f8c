#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mofo/image.hpp"

namespace mofo {

struct TubeDims {
  int t = 8;
  int h = 16;
  int w = 16;
  bool operator==(const TubeDims&) const = default;
};

// Video volume, values in [0,1], row-major over (T, H, W, C).
struct ClipTensor {
  int t = 0;
  int h = 0;
  int w = 0;
  int c = 1;
  std::vector<float> values;

  ClipTensor() = default;
  ClipTensor(int t_, int h_, int w_, int c_)
      : t(t_), h(h_), w(w_), c(c_),
        values(static_cast<std::size_t>(t_) * h_ * w_ * c_, 0.0f) {}

  float& at(int ti, int y, int x, int ci) {
    return values[((static_cast<std::size_t>(ti) * h + y) * w + x) * c + ci];
  }
  float at(int ti, int y, int x, int ci) const {
    return values[((static_cast<std::size_t>(ti) * h + y) * w + x) * c + ci];
  }

  static ClipTensor from_frames(const std::vector<Frame>& frames) {
    if (frames.empty()) throw std::invalid_argument("clip needs at least one frame");
    ClipTensor clip(static_cast<int>(frames.size()), frames[0].height, frames[0].width, 1);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (!frames[i].same_dims(frames[0]))
        throw std::invalid_argument("clip frames have non-uniform dimensions");
      std::copy(frames[i].data.begin(), frames[i].data.end(),
                clip.values.begin() + static_cast<std::ptrdiff_t>(i * frames[0].size()));
    }
    return clip;
  }

  void validate_divisible(const TubeDims& td) const {
    if (td.t <= 0 || td.h <= 0 || td.w <= 0 || t % td.t != 0 || h % td.h != 0 || w % td.w != 0)
      throw std::invalid_argument("clip dimensions must be divisible by tube dimensions");
    for (float v : values) {
      if (!std::isfinite(v)) throw std::invalid_argument("clip values must be finite");
    }
  }
};

// Canonical token order is row-major over (t_cell, h_cell, w_cell); within a
// tube, pixels flatten row-major over (t, y, x, c).
inline std::vector<float> extract_tube(const ClipTensor& clip, const TubeDims& td,
                                       int t_cell, int h_cell, int w_cell) {
  std::vector<float> tube(static_cast<std::size_t>(td.t) * td.h * td.w * clip.c);
  std::size_t k = 0;
  for (int ti = 0; ti < td.t; ++ti) {
    for (int y = 0; y < td.h; ++y) {
      for (int x = 0; x < td.w; ++x) {
        for (int ci = 0; ci < clip.c; ++ci) {
          tube[k++] = clip.at(t_cell * td.t + ti, h_cell * td.h + y, w_cell * td.w + x, ci);
        }
      }
    }
  }
  return tube;
}

}  // namespace mofo
