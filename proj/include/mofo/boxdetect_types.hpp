#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mofo {

struct BitMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // row-major, 0/1
};

// Ordered outer border of one 8-connected component plus its pixel count.
struct Contour {
  std::vector<std::pair<int, int>> points;  // (x, y) along the border
  long long area = 0;                       // component pixel count
};

// Axis-aligned pixel rectangle: [x0, x1) x [y0, y1).
struct MotionBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  long long area() const {
    return static_cast<long long>(x1 - x0) * static_cast<long long>(y1 - y0);
  }
  bool operator==(const MotionBox&) const = default;

  void validate(int frame_w, int frame_h) const {
    if (!(0 <= x0 && x0 < x1 && x1 <= frame_w && 0 <= y0 && y0 < y1 && y1 <= frame_h))
      throw std::invalid_argument("motion box violates bounds invariants");
  }
};

inline MotionBox union_box(const MotionBox& a, const MotionBox& b) {
  return MotionBox{std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1),
                   std::max(a.y1, b.y1)};
}

// Intersection over union by pixel area, in [0, 1].
inline double iou(const MotionBox& a, const MotionBox& b) {
  const long long iw = std::max(0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const long long ih = std::max(0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const long long inter = iw * ih;
  const long long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

inline void to_json(nlohmann::json& j, const MotionBox& b) {
  j = nlohmann::json{{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}};
}

inline void from_json(const nlohmann::json& j, MotionBox& b) {
  j.at("x0").get_to(b.x0);
  j.at("y0").get_to(b.y0);
  j.at("x1").get_to(b.x1);
  j.at("y1").get_to(b.y1);
}

}  // namespace mofo
