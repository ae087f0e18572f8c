#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "mofo/flow.hpp"
#include "mofo/image.hpp"
#include "mofo/rng.hpp"

namespace testutil {

// Band-limited texture built from sinusoids whose wavevectors are integer
// multiples of the frame period, so circular shifts are exact evaluations of
// the same function at offset coordinates.
struct SineTexture {
  int width, height;
  struct Wave {
    int n, m;
    double amp, phase;
  };
  std::vector<Wave> waves;

  SineTexture(int w, int h, std::uint64_t seed, int n_waves = 6) : width(w), height(h) {
    mofo::SplitMix64 rng(seed);
    for (int j = 0; j < n_waves; ++j) {
      Wave wv{};
      do {
        wv.n = static_cast<int>(rng.next_below(9)) - 4;
        wv.m = static_cast<int>(rng.next_below(9)) - 4;
      } while (wv.n == 0 && wv.m == 0);
      wv.amp = (0.25 + 0.75 * rng.next_unit()) * 0.4 / n_waves;
      wv.phase = rng.next_unit() * 2.0 * std::numbers::pi;
      waves.push_back(wv);
    }
  }

  double operator()(double x, double y) const {
    double v = 0.5;
    for (const auto& wv : waves) {
      v += wv.amp * std::sin(2.0 * std::numbers::pi *
                                 (wv.n * x / width + wv.m * y / height) +
                             wv.phase);
    }
    return std::clamp(v, 0.0, 1.0);
  }

  mofo::Frame render(double shift_x = 0.0, double shift_y = 0.0) const {
    mofo::Frame f(width, height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        f.at(x, y) = static_cast<float>((*this)(x - shift_x, y - shift_y));
      }
    }
    return f;
  }
};

// Mean endpoint error against a constant ground-truth displacement, over the
// interior (margin pixels away from every border).
inline double mean_epe(const mofo::FlowField& f, double gt_u, double gt_v, int margin) {
  double sum = 0.0;
  long count = 0;
  for (int y = margin; y < f.height - margin; ++y) {
    for (int x = margin; x < f.width - margin; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * f.width + x;
      const double du = f.u[i] - gt_u;
      const double dv = f.v[i] - gt_v;
      sum += std::sqrt(du * du + dv * dv);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace testutil
