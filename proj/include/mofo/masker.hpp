#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "mofo/boxdetect_types.hpp"
#include "mofo/clip.hpp"
#include "mofo/rng.hpp"

namespace mofo {

// Tokenization of a clip into non-overlapping 3D tubes, with each spatial
// cell classified against the motion box (cell center in box).
struct TubeGrid {
  int t_cells = 0;
  int h_cells = 0;
  int w_cells = 0;
  TubeDims tube_dims;
  std::vector<std::uint8_t> inside;  // h_cells * w_cells
  int n_inner = 0;                   // token counts, not spatial-cell counts
  int n_outer = 0;

  int spatial_cells() const { return h_cells * w_cells; }
  int n_tokens() const { return t_cells * h_cells * w_cells; }
  int inside_cells() const { return n_inner / std::max(1, t_cells); }
  bool cell_inside(int h, int w) const {
    return inside[static_cast<std::size_t>(h) * w_cells + w] != 0;
  }
};

inline TubeGrid tube_grid(int T, int H, int W, const TubeDims& td, const MotionBox& box) {
  if (td.t <= 0 || td.h <= 0 || td.w <= 0 || T <= 0 || H <= 0 || W <= 0)
    throw std::invalid_argument("tube_grid: dimensions must be positive");
  if (T % td.t != 0 || H % td.h != 0 || W % td.w != 0)
    throw std::invalid_argument("tube_grid: clip dims must be divisible by tube dims");
  box.validate(W, H);

  TubeGrid g;
  g.t_cells = T / td.t;
  g.h_cells = H / td.h;
  g.w_cells = W / td.w;
  g.tube_dims = td;
  g.inside.assign(static_cast<std::size_t>(g.h_cells) * g.w_cells, 0);
  int inside_count = 0;
  for (int h = 0; h < g.h_cells; ++h) {
    for (int w = 0; w < g.w_cells; ++w) {
      const double cx = w * td.w + (td.w - 1) / 2.0;
      const double cy = h * td.h + (td.h - 1) / 2.0;
      const bool in = cx >= box.x0 && cx < box.x1 && cy >= box.y0 && cy < box.y1;
      if (in) {
        g.inside[static_cast<std::size_t>(h) * g.w_cells + w] = 1;
        ++inside_count;
      }
    }
  }
  g.n_inner = g.t_cells * inside_count;
  g.n_outer = g.n_tokens() - g.n_inner;
  return g;
}

// Tube mask: one spatial pattern replicated across every temporal slot.
struct MaskPlan {
  int t_cells = 0;
  int h_cells = 0;
  int w_cells = 0;
  std::vector<std::uint8_t> spatial_mask;  // h_cells * w_cells
  double overall_ratio = 0.0;
  double inside_ratio = 0.0;
  std::uint64_t seed = 0;

  bool masked(int /*t*/, int h, int w) const {
    return spatial_mask[static_cast<std::size_t>(h) * w_cells + w] != 0;
  }
  bool token_masked(int token) const {
    return spatial_mask[static_cast<std::size_t>(token) % spatial_mask.size()] != 0;
  }
  int masked_spatial_cells() const {
    int n = 0;
    for (auto b : spatial_mask) n += b;
    return n;
  }
  int masked_tokens() const { return t_cells * masked_spatial_cells(); }
  int n_tokens() const { return t_cells * h_cells * w_cells; }
};

namespace detail {

// Budget rounds half-up; the inside guarantee rounds up. The 1e-9 slack keeps
// FP products like 0.7*10 = 7.000000000000001 from inflating a ceil.
inline int mask_budget(double overall_ratio, int spatial_cells) {
  return static_cast<int>(std::floor(overall_ratio * spatial_cells + 0.5));
}
inline int inside_minimum(double inside_ratio, int inside_cells) {
  return static_cast<int>(std::ceil(inside_ratio * inside_cells - 1e-9));
}

}  // namespace detail

// Samples a mask plan: exactly B = round(overall_ratio * S) spatial cells,
// of which min(ceil(inside_ratio * S_in), B) are drawn uniformly from inside
// the box and the remainder uniformly from outside; when outside cells run
// out the surplus falls back to the remaining inside cells.
inline MaskPlan sample_mask(const TubeGrid& grid, double overall_ratio, double inside_ratio,
                            std::uint64_t seed) {
  if (!(overall_ratio > 0.0 && overall_ratio <= 1.0))
    throw std::invalid_argument("sample_mask: overall_ratio must be in (0,1]");
  if (!(inside_ratio >= 0.0 && inside_ratio <= 1.0))
    throw std::invalid_argument("sample_mask: inside_ratio must be in [0,1]");

  const int S = grid.spatial_cells();
  const int B = detail::mask_budget(overall_ratio, S);
  if (B == 0) throw std::invalid_argument("sample_mask: budget is zero, nothing to reconstruct");

  std::vector<int> inside_cells, outside_cells;
  for (int i = 0; i < S; ++i) {
    (grid.inside[static_cast<std::size_t>(i)] ? inside_cells : outside_cells).push_back(i);
  }
  const int k_in = std::min(detail::inside_minimum(inside_ratio, static_cast<int>(inside_cells.size())), B);

  SplitMix64 rng(seed);
  MaskPlan plan;
  plan.t_cells = grid.t_cells;
  plan.h_cells = grid.h_cells;
  plan.w_cells = grid.w_cells;
  plan.overall_ratio = overall_ratio;
  plan.inside_ratio = inside_ratio;
  plan.seed = seed;
  plan.spatial_mask.assign(static_cast<std::size_t>(S), 0);

  const std::vector<int> in_pick =
      sample_without_replacement(static_cast<int>(inside_cells.size()), k_in, rng);
  for (int p : in_pick) plan.spatial_mask[static_cast<std::size_t>(inside_cells[static_cast<std::size_t>(p)])] = 1;

  int remaining = B - k_in;
  const int from_outside = std::min(remaining, static_cast<int>(outside_cells.size()));
  const std::vector<int> out_pick =
      sample_without_replacement(static_cast<int>(outside_cells.size()), from_outside, rng);
  for (int p : out_pick) plan.spatial_mask[static_cast<std::size_t>(outside_cells[static_cast<std::size_t>(p)])] = 1;
  remaining -= from_outside;

  if (remaining > 0) {
    // outside exhausted; fill from the inside cells not yet masked
    std::vector<int> leftovers;
    for (int cell : inside_cells) {
      if (!plan.spatial_mask[static_cast<std::size_t>(cell)]) leftovers.push_back(cell);
    }
    const std::vector<int> extra =
        sample_without_replacement(static_cast<int>(leftovers.size()), remaining, rng);
    for (int p : extra) plan.spatial_mask[static_cast<std::size_t>(leftovers[static_cast<std::size_t>(p)])] = 1;
  }
  return plan;
}

// Token partition induced by a plan, in canonical (t, h, w) row-major order.
struct TokenPartition {
  std::vector<std::vector<float>> visible_tokens;  // raw tube pixels
  std::vector<int> visible_indices;
  std::vector<int> masked_indices;
};

inline TokenPartition apply_mask(const ClipTensor& clip, const MaskPlan& plan) {
  const TubeDims td{clip.t / std::max(1, plan.t_cells), clip.h / std::max(1, plan.h_cells),
                    clip.w / std::max(1, plan.w_cells)};
  if (plan.t_cells <= 0 || plan.h_cells <= 0 || plan.w_cells <= 0 ||
      td.t * plan.t_cells != clip.t || td.h * plan.h_cells != clip.h ||
      td.w * plan.w_cells != clip.w)
    throw std::invalid_argument("apply_mask: plan grid does not tile the clip");
  clip.validate_divisible(td);

  TokenPartition part;
  for (int t = 0; t < plan.t_cells; ++t) {
    for (int h = 0; h < plan.h_cells; ++h) {
      for (int w = 0; w < plan.w_cells; ++w) {
        const int token = (t * plan.h_cells + h) * plan.w_cells + w;
        if (plan.masked(t, h, w)) {
          part.masked_indices.push_back(token);
        } else {
          part.visible_indices.push_back(token);
          part.visible_tokens.push_back(extract_tube(clip, td, t, h, w));
        }
      }
    }
  }
  return part;
}

inline void to_json(nlohmann::json& j, const MaskPlan& p) {
  j = nlohmann::json{{"t_cells", p.t_cells},
                     {"h_cells", p.h_cells},
                     {"w_cells", p.w_cells},
                     {"overall_ratio", p.overall_ratio},
                     {"inside_ratio", p.inside_ratio},
                     {"seed", p.seed},
                     {"spatial_mask", p.spatial_mask}};
}

inline void from_json(const nlohmann::json& j, MaskPlan& p) {
  j.at("t_cells").get_to(p.t_cells);
  j.at("h_cells").get_to(p.h_cells);
  j.at("w_cells").get_to(p.w_cells);
  j.at("overall_ratio").get_to(p.overall_ratio);
  j.at("inside_ratio").get_to(p.inside_ratio);
  j.at("seed").get_to(p.seed);
  j.at("spatial_mask").get_to(p.spatial_mask);
}

}  // namespace mofo
