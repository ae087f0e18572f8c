#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mofo/image.hpp"
#include "mofo/parallel.hpp"

namespace mofo {

// TV-L1 solver parameters (Zach-Pock-Bischof primal-dual scheme).
struct FlowConfig {
  int pyramid_levels = 5;       // cap; levels also stop once min side would drop below 16
  float pyramid_scale = 0.5f;   // downscale factor per level, in (0,1)
  int warps_per_level = 5;
  int inner_iterations = 30;
  float lambda_data = 0.15f;    // data attachment weight
  float theta = 0.3f;           // quadratic coupling between u and v
  float tau = 0.25f;            // dual step size
  float stop_epsilon = 1e-3f;   // convergence tolerance on mean squared flow update
  bool median_filter = true;    // 3x3 median on the flow after each warp

  void validate() const {
    if (pyramid_levels < 1 || warps_per_level < 1 || inner_iterations < 1)
      throw std::invalid_argument("flow config counts must be positive");
    if (!(pyramid_scale > 0.0f && pyramid_scale < 1.0f))
      throw std::invalid_argument("pyramid_scale must be in (0,1)");
    if (!(lambda_data > 0.0f && theta > 0.0f && tau > 0.0f && stop_epsilon > 0.0f))
      throw std::invalid_argument("flow config weights must be positive");
    if (tau * theta > 0.125f + 1e-9f)
      throw std::invalid_argument("primal-dual stability requires tau*theta <= 1/8");
  }
};

// Per-pixel displacement from frame i to frame i+1, in pixels/frame.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> u;  // horizontal, row-major
  std::vector<float> v;  // vertical, row-major

  FlowField() = default;
  FlowField(int w, int h)
      : width(w), height(h),
        u(static_cast<std::size_t>(w) * h, 0.0f),
        v(static_cast<std::size_t>(w) * h, 0.0f) {}
  std::size_t size() const { return u.size(); }
};

// Per-level energy trace, one entry per completed warp iteration.
struct FlowDiagnostics {
  struct LevelTrace {
    int width = 0, height = 0;
    std::vector<double> warp_energies;
  };
  std::vector<LevelTrace> levels;  // coarsest first
};

// TV-L1 objective with the solver's discretization: forward-difference TV plus
// bilinear-warped L1 data term.
inline double tvl1_energy(const Frame& prev, const Frame& next, const FlowField& f,
                          double lambda) {
  const int W = prev.width, H = prev.height;
  double e = 0.0;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      const double warped = detail::sample_bilinear(next, x + f.u[i], y + f.v[i]);
      e += lambda * std::abs(warped - prev.at(x, y));
      const double ux = (x + 1 < W) ? f.u[i + 1] - f.u[i] : 0.0;
      const double uy = (y + 1 < H) ? f.u[i + W] - f.u[i] : 0.0;
      const double vx = (x + 1 < W) ? f.v[i + 1] - f.v[i] : 0.0;
      const double vy = (y + 1 < H) ? f.v[i + W] - f.v[i] : 0.0;
      e += std::sqrt(ux * ux + uy * uy) + std::sqrt(vx * vx + vy * vy);
    }
  }
  return e;
}

namespace detail {

inline void centered_gradient(const std::vector<float>& f, std::vector<float>& fx,
                              std::vector<float>& fy, int W, int H) {
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      if (x == 0)
        fx[i] = f[i + 1] - f[i];
      else if (x == W - 1)
        fx[i] = f[i] - f[i - 1];
      else
        fx[i] = 0.5f * (f[i + 1] - f[i - 1]);
      if (y == 0)
        fy[i] = f[i + W] - f[i];
      else if (y == H - 1)
        fy[i] = f[i] - f[i - W];
      else
        fy[i] = 0.5f * (f[i + W] - f[i - W]);
    }
  }
}

inline void forward_gradient(const std::vector<float>& f, std::vector<float>& fx,
                             std::vector<float>& fy, int W, int H) {
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      fx[i] = (x + 1 < W) ? f[i + 1] - f[i] : 0.0f;
      fy[i] = (y + 1 < H) ? f[i + W] - f[i] : 0.0f;
    }
  }
}

// Adjoint of the forward gradient.
inline void divergence(const std::vector<float>& p1, const std::vector<float>& p2,
                       std::vector<float>& div, int W, int H) {
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      float d = 0.0f;
      if (x == 0)
        d += p1[i];
      else if (x == W - 1)
        d += -p1[i - 1];
      else
        d += p1[i] - p1[i - 1];
      if (y == 0)
        d += p2[i];
      else if (y == H - 1)
        d += -p2[i - W];
      else
        d += p2[i] - p2[i - W];
      div[i] = d;
    }
  }
}

inline void warp_bilinear(const Image<float>& src, const std::vector<float>& u,
                          const std::vector<float>& v, std::vector<float>& out) {
  const int W = src.width, H = src.height;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      out[i] = static_cast<float>(sample_bilinear(src, x + u[i], y + v[i]));
    }
  }
}

// Marks pixels whose warped position leaves the image; the data term is
// disabled there (the linearized model is meaningless under clamping and
// border pixels would otherwise drift without bound).
inline void warp_bounds_mask(int W, int H, const std::vector<float>& u,
                             const std::vector<float>& v, std::vector<std::uint8_t>& inside) {
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      const float xw = x + u[i], yw = y + v[i];
      inside[i] = (xw >= 0.0f && xw <= static_cast<float>(W - 1) && yw >= 0.0f &&
                   yw <= static_cast<float>(H - 1))
                      ? 1
                      : 0;
    }
  }
}

inline void median3x3(std::vector<float>& f, int W, int H, std::vector<float>& scratch) {
  scratch.resize(f.size());
  float window[9];
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = std::clamp(x + dx, 0, W - 1);
          const int yy = std::clamp(y + dy, 0, H - 1);
          window[n++] = f[static_cast<std::size_t>(yy) * W + xx];
        }
      }
      std::nth_element(window, window + 4, window + 9);
      scratch[static_cast<std::size_t>(y) * W + x] = window[4];
    }
  }
  f.swap(scratch);
}

inline Image<float> resize_bilinear(const Image<float>& src, int nw, int nh) {
  Image<float> out(nw, nh);
  const double sx = static_cast<double>(nw) / src.width;
  const double sy = static_cast<double>(nh) / src.height;
  for (int y = 0; y < nh; ++y) {
    for (int x = 0; x < nw; ++x) {
      out.at(x, y) =
          static_cast<float>(sample_bilinear(src, (x + 0.5) / sx - 0.5, (y + 0.5) / sy - 0.5));
    }
  }
  return out;
}

inline Image<float> downscale(const Image<float>& src, int nw, int nh, double scale) {
  const double sigma = 0.6 * std::sqrt(1.0 / (scale * scale) - 1.0);
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  return resize_bilinear(gaussian_blur(src, sigma, radius), nw, nh);
}

// One pyramid level of the primal-dual solver. u, v enter with the upscaled
// coarser-level estimate and leave refined.
inline void tvl1_solve_level(const Image<float>& I0, const Image<float>& I1,
                             std::vector<float>& u, std::vector<float>& v,
                             const FlowConfig& cfg, FlowDiagnostics::LevelTrace* trace) {
  const int W = I0.width, H = I0.height;
  const std::size_t n = static_cast<std::size_t>(W) * H;
  const float l_t = cfg.lambda_data * cfg.theta;
  const float taut = cfg.tau / cfg.theta;
  constexpr float kGradFloor = 1e-10f;

  std::vector<float> I1x(n), I1y(n), I1w(n), I1wx(n), I1wy(n);
  std::vector<float> grad(n), rho_c(n), v1(n), v2(n);
  std::vector<float> p11(n, 0.0f), p12(n, 0.0f), p21(n, 0.0f), p22(n, 0.0f);
  std::vector<float> div1(n), div2(n), gx(n), gy(n), scratch;
  std::vector<std::uint8_t> in_bounds(n, 1);
  std::vector<float> best_u, best_v;
  double best_energy = 0.0;

  centered_gradient(I1.data, I1x, I1y, W, H);
  Image<float> I1x_img{}, I1y_img{};
  I1x_img.width = I1y_img.width = W;
  I1x_img.height = I1y_img.height = H;
  I1x_img.data = I1x;
  I1y_img.data = I1y;

  for (int warp = 0; warp < cfg.warps_per_level; ++warp) {
    warp_bilinear(I1, u, v, I1w);
    warp_bilinear(I1x_img, u, v, I1wx);
    warp_bilinear(I1y_img, u, v, I1wy);
    warp_bounds_mask(W, H, u, v, in_bounds);
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_bounds[i]) {
        I1wx[i] = I1wy[i] = 0.0f;
        grad[i] = 0.0f;
        rho_c[i] = 0.0f;
        continue;
      }
      grad[i] = I1wx[i] * I1wx[i] + I1wy[i] * I1wy[i];
      rho_c[i] = I1w[i] - I1wx[i] * u[i] - I1wy[i] * v[i] - I0.data[i];
    }

    for (int it = 0; it < cfg.inner_iterations; ++it) {
      // pointwise thresholding step on the auxiliary variable
      for (std::size_t i = 0; i < n; ++i) {
        const float rho = rho_c[i] + I1wx[i] * u[i] + I1wy[i] * v[i];
        float d1, d2;
        if (rho < -l_t * grad[i]) {
          d1 = l_t * I1wx[i];
          d2 = l_t * I1wy[i];
        } else if (rho > l_t * grad[i]) {
          d1 = -l_t * I1wx[i];
          d2 = -l_t * I1wy[i];
        } else if (grad[i] > kGradFloor) {
          const float fi = -rho / grad[i];
          d1 = fi * I1wx[i];
          d2 = fi * I1wy[i];
        } else {
          d1 = d2 = 0.0f;
        }
        v1[i] = u[i] + d1;
        v2[i] = v[i] + d2;
      }

      divergence(p11, p12, div1, W, H);
      divergence(p21, p22, div2, W, H);
      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const float u_prev = u[i], v_prev = v[i];
        u[i] = v1[i] + cfg.theta * div1[i];
        v[i] = v2[i] + cfg.theta * div2[i];
        err += static_cast<double>(u[i] - u_prev) * (u[i] - u_prev) +
               static_cast<double>(v[i] - v_prev) * (v[i] - v_prev);
      }
      err /= static_cast<double>(n);

      forward_gradient(u, gx, gy, W, H);
      for (std::size_t i = 0; i < n; ++i) {
        const float ng = 1.0f + taut * std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
        p11[i] = (p11[i] + taut * gx[i]) / ng;
        p12[i] = (p12[i] + taut * gy[i]) / ng;
      }
      forward_gradient(v, gx, gy, W, H);
      for (std::size_t i = 0; i < n; ++i) {
        const float ng = 1.0f + taut * std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
        p21[i] = (p21[i] + taut * gx[i]) / ng;
        p22[i] = (p22[i] + taut * gy[i]) / ng;
      }

      if (err < static_cast<double>(cfg.stop_epsilon) * cfg.stop_epsilon) break;
    }

    if (cfg.median_filter) {
      median3x3(u, W, H, scratch);
      median3x3(v, W, H, scratch);
    }

    // Monotone safeguard: a warp whose re-linearization worsened the true
    // objective is rolled back, keeping the best flow seen at this level.
    FlowField f;
    f.width = W;
    f.height = H;
    f.u = u;
    f.v = v;
    double energy = tvl1_energy(I0, I1, f, cfg.lambda_data);
    if (warp > 0 && energy > best_energy) {
      u = best_u;
      v = best_v;
      energy = best_energy;
    } else {
      best_u = u;
      best_v = v;
      best_energy = energy;
    }
    if (trace) trace->warp_energies.push_back(energy);
  }
}

}  // namespace detail

// Dense TV-L1 optical flow from prev to next. Deterministic for fixed inputs
// and config; optional diagnostics record the per-warp energy trace.
inline FlowField estimate_flow(const Frame& prev, const Frame& next, const FlowConfig& cfg,
                               FlowDiagnostics* diag = nullptr) {
  cfg.validate();
  if (prev.width != next.width || prev.height != next.height)
    throw std::invalid_argument("estimate_flow: frame dimensions differ");
  validate_frame(prev);
  validate_frame(next);

  // Jointly rescale intensities to [0,255]; lambda_data is calibrated for
  // that range, and [0,1] inputs would leave the data term ~255x too weak.
  float lo = prev.data[0], hi = prev.data[0];
  for (float p : prev.data) {
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  for (float p : next.data) {
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  Image<float> I0 = prev, I1 = next;
  if (hi > lo) {
    const float s = 255.0f / (hi - lo);
    for (float& p : I0.data) p = (p - lo) * s;
    for (float& p : I1.data) p = (p - lo) * s;
  }

  constexpr double kPresmoothSigma = 0.8;
  I0 = detail::gaussian_blur(I0, kPresmoothSigma, 3);
  I1 = detail::gaussian_blur(I1, kPresmoothSigma, 3);

  // plan level dimensions; coarser levels stop before min side drops below 16
  std::vector<std::pair<int, int>> dims{{prev.width, prev.height}};
  while (static_cast<int>(dims.size()) < cfg.pyramid_levels) {
    const int nw = static_cast<int>(std::lround(dims.back().first * cfg.pyramid_scale));
    const int nh = static_cast<int>(std::lround(dims.back().second * cfg.pyramid_scale));
    if (std::min(nw, nh) < 16) break;
    dims.emplace_back(nw, nh);
  }

  std::vector<Image<float>> pyr0{I0}, pyr1{I1};
  for (std::size_t l = 1; l < dims.size(); ++l) {
    pyr0.push_back(detail::downscale(pyr0[l - 1], dims[l].first, dims[l].second, cfg.pyramid_scale));
    pyr1.push_back(detail::downscale(pyr1[l - 1], dims[l].first, dims[l].second, cfg.pyramid_scale));
  }

  std::vector<float> u(static_cast<std::size_t>(dims.back().first) * dims.back().second, 0.0f);
  std::vector<float> v(u.size(), 0.0f);
  for (int l = static_cast<int>(dims.size()) - 1; l >= 0; --l) {
    FlowDiagnostics::LevelTrace* trace = nullptr;
    if (diag) {
      diag->levels.push_back({dims[static_cast<std::size_t>(l)].first,
                              dims[static_cast<std::size_t>(l)].second,
                              {}});
      trace = &diag->levels.back();
    }
    detail::tvl1_solve_level(pyr0[static_cast<std::size_t>(l)], pyr1[static_cast<std::size_t>(l)],
                             u, v, cfg, trace);
    if (l > 0) {
      const auto [cw, ch] = dims[static_cast<std::size_t>(l)];
      const auto [nw, nh] = dims[static_cast<std::size_t>(l - 1)];
      Image<float> uc{}, vc{};
      uc.width = vc.width = cw;
      uc.height = vc.height = ch;
      uc.data = std::move(u);
      vc.data = std::move(v);
      Image<float> uf = detail::resize_bilinear(uc, nw, nh);
      Image<float> vf = detail::resize_bilinear(vc, nw, nh);
      const float fx = static_cast<float>(nw) / cw;
      const float fy = static_cast<float>(nh) / ch;
      for (float& x : uf.data) x *= fx;
      for (float& x : vf.data) x *= fy;
      u = std::move(uf.data);
      v = std::move(vf.data);
    }
  }

  FlowField out(prev.width, prev.height);
  out.u = std::move(u);
  out.v = std::move(v);
  return out;
}

// Flow for every consecutive frame pair; result i maps frame i to frame i+1.
// Pairs are independent, so evaluation may run in parallel with results
// identical to the sequential order.
inline std::vector<FlowField> clip_flows(const std::vector<Frame>& frames,
                                         const FlowConfig& cfg) {
  if (frames.size() < 2) throw std::invalid_argument("clip_flows: need at least 2 frames");
  for (const auto& f : frames) {
    if (f.width != frames[0].width || f.height != frames[0].height)
      throw std::invalid_argument("clip_flows: frame dimensions are not uniform");
  }
  std::vector<FlowField> fields(frames.size() - 1);
  parallel_for(static_cast<int>(fields.size()), [&](int i) {
    fields[static_cast<std::size_t>(i)] =
        estimate_flow(frames[static_cast<std::size_t>(i)], frames[static_cast<std::size_t>(i) + 1], cfg);
  });
  return fields;
}

}  // namespace mofo
