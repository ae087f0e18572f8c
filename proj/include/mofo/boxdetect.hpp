#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mofo/boxdetect_types.hpp"
#include "mofo/flow.hpp"
#include "mofo/motionmap.hpp"

namespace mofo {

// Otsu's method over a 256-bin histogram spanning [min, max]. Class statistics
// use exact per-bin value sums, so the selected split maximizes the true
// between-class variance among the 256 candidate thresholds. Constant maps
// binarize to all-false.
inline BitMask binarize(const MotionMap& map) {
  BitMask mask;
  mask.width = map.width;
  mask.height = map.height;
  mask.bits.assign(map.size(), 0);

  float lo = map.data[0], hi = map.data[0];
  for (float v : map.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) return mask;

  constexpr int kBins = 256;
  const double bin_width = (static_cast<double>(hi) - lo) / kBins;
  std::vector<std::int64_t> count(kBins, 0);
  std::vector<double> value_sum(kBins, 0.0);
  for (float v : map.data) {
    int b = static_cast<int>((static_cast<double>(v) - lo) / bin_width);
    b = std::clamp(b, 0, kBins - 1);
    ++count[static_cast<std::size_t>(b)];
    value_sum[static_cast<std::size_t>(b)] += v;
  }

  const auto total_n = static_cast<double>(map.size());
  double total_sum = 0.0;
  for (double s : value_sum) total_sum += s;

  int best_bin = 0;
  double best_var = -1.0;
  double n0 = 0.0, sum0 = 0.0;
  for (int k = 0; k < kBins; ++k) {
    n0 += static_cast<double>(count[static_cast<std::size_t>(k)]);
    sum0 += value_sum[static_cast<std::size_t>(k)];
    const double n1 = total_n - n0;
    if (n0 <= 0.0 || n1 <= 0.0) continue;
    const double mu0 = sum0 / n0;
    const double mu1 = (total_sum - sum0) / n1;
    const double between = n0 * n1 * (mu0 - mu1) * (mu0 - mu1);
    if (between > best_var) {
      best_var = between;
      best_bin = k;
    }
  }

  const double t = lo + (best_bin + 1) * bin_width;
  for (std::size_t i = 0; i < map.size(); ++i) mask.bits[i] = map.data[i] > t ? 1 : 0;
  return mask;
}

namespace detail {

// Moore border following around one 8-connected component, clockwise starting
// from the component's first scan-order pixel. Terminates with Jacob's
// criterion (revisiting the start pixel from the same backtrack direction).
inline std::vector<std::pair<int, int>> trace_outer_border(const std::vector<int>& labels,
                                                           int W, int H, int label,
                                                           int sx, int sy) {
  // clockwise neighborhood in image coordinates (y grows downward)
  static constexpr int kDX[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  static constexpr int kDY[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  auto is_fg = [&](int x, int y) {
    return x >= 0 && x < W && y >= 0 && y < H &&
           labels[static_cast<std::size_t>(y) * W + x] == label;
  };

  // clockwise scan for the first foreground neighbor after the backtrack dir
  auto next_dir = [&](int x, int y, int back_dir) {
    for (int i = 1; i <= 8; ++i) {
      const int d = (back_dir + i) % 8;
      if (is_fg(x + kDX[d], y + kDY[d])) return d;
    }
    return -1;
  };

  std::vector<std::pair<int, int>> points{{sx, sy}};
  const int start_dir = next_dir(sx, sy, 4);  // west is background for the first scan-order pixel
  if (start_dir < 0) return points;           // isolated pixel

  int cx = sx, cy = sy, dir = start_dir;
  while (true) {
    cx += kDX[dir];
    cy += kDY[dir];
    const int nd = next_dir(cx, cy, (dir + 4) % 8);
    // Jacob's criterion: the (position, outgoing direction) state repeats
    if (cx == sx && cy == sy && nd == start_dir) break;
    points.emplace_back(cx, cy);
    dir = nd;
    if (points.size() > 4 * static_cast<std::size_t>(W) * H) break;  // malformed input guard
  }
  return points;
}

}  // namespace detail

// Outer borders of all 8-connected foreground components in scan order. Each
// contour carries its component's pixel count; hole borders are not returned.
inline std::vector<Contour> find_contours(const BitMask& mask) {
  const int W = mask.width, H = mask.height;
  std::vector<int> labels(mask.bits.size(), 0);
  std::vector<long long> areas;
  std::vector<std::pair<int, int>> starts;
  std::vector<std::pair<int, int>> stack;

  int next_label = 0;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      if (!mask.bits[i] || labels[i] != 0) continue;
      ++next_label;
      starts.emplace_back(x, y);
      long long area = 0;
      stack.assign(1, {x, y});
      labels[i] = next_label;
      while (!stack.empty()) {
        auto [px, py] = stack.back();
        stack.pop_back();
        ++area;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = px + dx, ny = py + dy;
            if (nx < 0 || nx >= W || ny < 0 || ny >= H) continue;
            const std::size_t j = static_cast<std::size_t>(ny) * W + nx;
            if (mask.bits[j] && labels[j] == 0) {
              labels[j] = next_label;
              stack.emplace_back(nx, ny);
            }
          }
        }
      }
      areas.push_back(area);
    }
  }

  std::vector<Contour> contours;
  contours.reserve(static_cast<std::size_t>(next_label));
  for (int l = 1; l <= next_label; ++l) {
    Contour c;
    c.area = areas[static_cast<std::size_t>(l - 1)];
    c.points = detail::trace_outer_border(labels, W, H, l, starts[static_cast<std::size_t>(l - 1)].first,
                                          starts[static_cast<std::size_t>(l - 1)].second);
    contours.push_back(std::move(c));
  }
  return contours;
}

// Tightest box covering the two largest contours (one if only one remains).
// Components below min_area_frac of the frame area are discarded before
// ranking; with no survivors the full frame is returned.
inline MotionBox select_motion_box(const std::vector<Contour>& contours, int frame_w,
                                   int frame_h, double min_area_frac = 0.001) {
  const double min_area = min_area_frac * frame_w * frame_h;
  std::vector<const Contour*> ranked;
  for (const auto& c : contours) {
    if (static_cast<double>(c.area) >= min_area) ranked.push_back(&c);
  }
  if (ranked.empty()) return MotionBox{0, 0, frame_w, frame_h};
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Contour* a, const Contour* b) { return a->area > b->area; });
  if (ranked.size() > 2) ranked.resize(2);

  int x0 = frame_w, y0 = frame_h, x1 = 0, y1 = 0;
  for (const Contour* c : ranked) {
    for (const auto& [px, py] : c->points) {
      x0 = std::min(x0, px);
      y0 = std::min(y0, py);
      x1 = std::max(x1, px + 1);
      y1 = std::max(y1, py + 1);
    }
  }
  return MotionBox{x0, y0, x1, y1};
}

// Per-pair motion boxes for a clip: flow -> motion map -> smooth -> threshold
// -> contours -> top-2 box. Entry i corresponds to frames (i, i+1).
inline std::vector<MotionBox> per_frame_motion_boxes(const std::vector<Frame>& frames,
                                                     const FlowConfig& flow_cfg,
                                                     const SmoothConfig& smooth_cfg,
                                                     double min_area_frac = 0.001) {
  const std::vector<FlowField> flows = clip_flows(frames, flow_cfg);
  std::vector<MotionBox> boxes(flows.size());
  parallel_for(static_cast<int>(flows.size()), [&](int i) {
    const MotionMap smoothed =
        gaussian_smooth(motion_map(flows[static_cast<std::size_t>(i)]), smooth_cfg);
    const BitMask mask = binarize(smoothed);
    boxes[static_cast<std::size_t>(i)] =
        select_motion_box(find_contours(mask), mask.width, mask.height, min_area_frac);
  });
  return boxes;
}

// Union of the per-frame boxes; degenerate (motionless) clips fall back to the
// full frame via the per-frame fallback.
inline MotionBox clip_motion_box(const std::vector<Frame>& frames, const FlowConfig& flow_cfg,
                                 const SmoothConfig& smooth_cfg, double min_area_frac = 0.001) {
  const std::vector<MotionBox> boxes =
      per_frame_motion_boxes(frames, flow_cfg, smooth_cfg, min_area_frac);
  MotionBox u = boxes.front();
  for (const auto& b : boxes) u = union_box(u, b);
  return u;
}

}  // namespace mofo
