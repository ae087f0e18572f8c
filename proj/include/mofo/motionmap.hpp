#pragma once

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <utility>

#include "mofo/flow.hpp"
#include "mofo/image.hpp"

namespace mofo {

// Nonnegative motion-boundary magnitude per pixel.
using MotionMap = Image<float>;

struct SmoothConfig {
  float sigma = 2.0f;     // pixels
  int kernel_radius = 5;  // taps at offsets [-radius, radius]

  void validate() const {
    if (!(sigma > 0.0f)) throw std::invalid_argument("smoothing sigma must be positive");
    if (kernel_radius < 2 * static_cast<int>(std::ceil(sigma)))
      throw std::invalid_argument("kernel_radius must be at least 2*ceil(sigma)");
  }
};

// Central differences in the interior, one-sided at the borders.
inline std::pair<Image<float>, Image<float>> spatial_gradients(const Image<float>& f) {
  if (f.width < 3 || f.height < 3)
    throw std::invalid_argument("spatial_gradients: field must be at least 3x3");
  Image<float> dx(f.width, f.height), dy(f.width, f.height);
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      if (x == 0)
        dx.at(x, y) = f.at(1, y) - f.at(0, y);
      else if (x == f.width - 1)
        dx.at(x, y) = f.at(x, y) - f.at(x - 1, y);
      else
        dx.at(x, y) = 0.5f * (f.at(x + 1, y) - f.at(x - 1, y));
      if (y == 0)
        dy.at(x, y) = f.at(x, 1) - f.at(x, 0);
      else if (y == f.height - 1)
        dy.at(x, y) = f.at(x, y) - f.at(x, y - 1);
      else
        dy.at(x, y) = 0.5f * (f.at(x, y + 1) - f.at(x, y - 1));
    }
  }
  return {std::move(dx), std::move(dy)};
}

// Motion-boundary magnitude: the norm of all four flow derivatives. Constant
// (camera-induced) flow components cancel exactly.
inline MotionMap motion_map(const FlowField& flow) {
  if (flow.width < 3 || flow.height < 3)
    throw std::invalid_argument("motion_map: flow must be at least 3x3");
  for (std::size_t i = 0; i < flow.size(); ++i) {
    if (!std::isfinite(flow.u[i]) || !std::isfinite(flow.v[i]))
      throw std::invalid_argument("motion_map: flow contains non-finite values");
  }
  Image<float> u(flow.width, flow.height), v(flow.width, flow.height);
  u.data = flow.u;
  v.data = flow.v;
  auto [ux, uy] = spatial_gradients(u);
  auto [vx, vy] = spatial_gradients(v);
  MotionMap m(flow.width, flow.height);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m.data[i] = std::sqrt(ux.data[i] * ux.data[i] + uy.data[i] * uy.data[i] +
                          vx.data[i] * vx.data[i] + vy.data[i] * vy.data[i]);
  }
  return m;
}

inline MotionMap gaussian_smooth(const MotionMap& map, const SmoothConfig& cfg) {
  cfg.validate();
  if (map.width <= 0 || map.height <= 0)
    throw std::invalid_argument("gaussian_smooth: empty map");
  MotionMap out = detail::gaussian_blur(map, cfg.sigma, cfg.kernel_radius);
  for (float& v : out.data) v = std::max(v, 0.0f);
  return out;
}

// Min-max scaled PGM export for visual inspection; constant maps render black.
inline void write_motionmap_pgm(const std::filesystem::path& path, const MotionMap& map) {
  float lo = map.data.empty() ? 0.0f : map.data[0];
  float hi = lo;
  for (float v : map.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Image<float> scaled(map.width, map.height);
  const float range = hi - lo;
  for (std::size_t i = 0; i < map.size(); ++i)
    scaled.data[i] = range > 0.0f ? (map.data[i] - lo) / range : 0.0f;
  write_pgm(path, scaled);
}

}  // namespace mofo
