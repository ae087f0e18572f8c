#include <catch2/catch_amalgamated.hpp>

#include "mofo/boxdetect.hpp"
#include "mofo/rng.hpp"
#include "testutil.hpp"

using namespace mofo;

namespace {

// Independent Otsu oracle: brute force over the 256 candidate thresholds,
// computing the between-class variance directly from the raw pixel values.
BitMask otsu_oracle(const MotionMap& map) {
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
  const double binw = (static_cast<double>(hi) - lo) / 256.0;

  double best_var = -1.0;
  double best_t = hi;
  for (int k = 0; k < 256; ++k) {
    const double t = lo + (k + 1) * binw;
    double n0 = 0, n1 = 0, s0 = 0, s1 = 0;
    for (float v : map.data) {
      if (v > t) {
        n1 += 1;
        s1 += v;
      } else {
        n0 += 1;
        s0 += v;
      }
    }
    if (n0 == 0 || n1 == 0) continue;
    const double mu0 = s0 / n0, mu1 = s1 / n1;
    const double between = n0 * n1 * (mu0 - mu1) * (mu0 - mu1);
    if (between > best_var) {
      best_var = between;
      best_t = t;
    }
  }
  for (std::size_t i = 0; i < map.size(); ++i) mask.bits[i] = map.data[i] > best_t ? 1 : 0;
  return mask;
}

BitMask make_mask(int w, int h, std::initializer_list<std::pair<int, int>> fg) {
  BitMask m;
  m.width = w;
  m.height = h;
  m.bits.assign(static_cast<std::size_t>(w) * h, 0);
  for (auto [x, y] : fg) m.bits[static_cast<std::size_t>(y) * w + x] = 1;
  return m;
}

}  // namespace

TEST_CASE("binarize splits a two-valued map at the step") {
  MotionMap m(16, 8, 0.0f);
  for (int y = 0; y < 8; ++y)
    for (int x = 8; x < 16; ++x) m.at(x, y) = 10.0f;
  const BitMask b = binarize(m);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 16; ++x) CHECK(b.bits[static_cast<std::size_t>(y) * 16 + x] == (x >= 8 ? 1 : 0));
}

TEST_CASE("binarize of a constant map is all false") {
  const BitMask b = binarize(MotionMap(12, 9, 4.5f));
  for (auto bit : b.bits) CHECK(bit == 0);
}

TEST_CASE("binarize isolates a single bright pixel") {
  MotionMap m(10, 10, 0.0f);
  m.at(3, 7) = 255.0f;
  const BitMask b = binarize(m);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x)
      CHECK(b.bits[static_cast<std::size_t>(y) * 10 + x] == ((x == 3 && y == 7) ? 1 : 0));
}

TEST_CASE("binarize matches the brute-force Otsu oracle") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    MotionMap m(20, 15, 0.0f);
    SplitMix64 rng(seed);
    // bimodal-ish map: low plateau with a high-valued blob
    for (float& v : m.data) v = static_cast<float>(rng.next_unit());
    for (int y = 4; y < 9; ++y)
      for (int x = 6; x < 14; ++x) m.at(x, y) += 4.0f + static_cast<float>(rng.next_unit());
    const BitMask got = binarize(m);
    const BitMask want = otsu_oracle(m);
    CHECK(got.bits == want.bits);
  }
}

TEST_CASE("contours of an empty mask") {
  const BitMask m = make_mask(6, 6, {});
  CHECK(find_contours(m).empty());
}

TEST_CASE("contour of a filled 3x3 square") {
  BitMask m = make_mask(7, 7, {});
  for (int y = 2; y <= 4; ++y)
    for (int x = 2; x <= 4; ++x) m.bits[static_cast<std::size_t>(y) * 7 + x] = 1;
  const auto contours = find_contours(m);
  REQUIRE(contours.size() == 1);
  CHECK(contours[0].area == 9);
  CHECK(contours[0].points.size() == 8);  // all square pixels except the center
  for (const auto& [x, y] : contours[0].points) CHECK((x != 3 || y != 3));
}

TEST_CASE("two disjoint squares give two contours") {
  BitMask m = make_mask(8, 8, {{1, 1}, {2, 1}, {1, 2}, {2, 2}, {5, 5}, {6, 5}, {5, 6}, {6, 6}});
  const auto contours = find_contours(m);
  REQUIRE(contours.size() == 2);
  CHECK(contours[0].area == 4);
  CHECK(contours[1].area == 4);
  CHECK(contours[0].points.size() == 4);
}

TEST_CASE("single-pixel component yields a one-point contour") {
  const auto contours = find_contours(make_mask(5, 5, {{2, 2}}));
  REQUIRE(contours.size() == 1);
  CHECK(contours[0].area == 1);
  REQUIRE(contours[0].points.size() == 1);
  CHECK(contours[0].points[0] == std::make_pair(2, 2));
}

TEST_CASE("contour areas sum to the foreground count") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    BitMask m;
    m.width = 24;
    m.height = 20;
    m.bits.assign(24 * 20, 0);
    SplitMix64 rng(seed);
    long long fg = 0;
    for (auto& b : m.bits) {
      b = rng.next_unit() < 0.3 ? 1 : 0;
      fg += b;
    }
    const auto contours = find_contours(m);
    long long total = 0;
    for (const auto& c : contours) {
      total += c.area;
      CHECK(c.area >= 1);
      CHECK_FALSE(c.points.empty());
    }
    CHECK(total == fg);
  }
}

TEST_CASE("contour points form a closed 8-connected loop") {
  BitMask m = make_mask(12, 12, {});
  for (int y = 3; y <= 8; ++y)
    for (int x = 2; x <= 9; ++x)
      if ((x + y) % 7 != 0) m.bits[static_cast<std::size_t>(y) * 12 + x] = 1;
  for (const auto& c : find_contours(m)) {
    const auto& pts = c.points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& a = pts[i];
      const auto& b = pts[(i + 1) % pts.size()];
      CHECK(std::max(std::abs(a.first - b.first), std::abs(a.second - b.second)) <= 1);
    }
  }
}

TEST_CASE("select_motion_box ranking and fallback") {
  auto contour_with_bbox = [](int x0, int y0, int x1, int y1, long long area) {
    Contour c;
    c.area = area;
    for (int x = x0; x < x1; ++x) {
      c.points.emplace_back(x, y0);
      c.points.emplace_back(x, y1 - 1);
    }
    for (int y = y0; y < y1; ++y) {
      c.points.emplace_back(x0, y);
      c.points.emplace_back(x1 - 1, y);
    }
    return c;
  };

  SECTION("single contour gives its bbox") {
    const auto box = select_motion_box({contour_with_bbox(1, 1, 4, 4, 4)}, 16, 16);
    CHECK(box == MotionBox{1, 1, 4, 4});
  }
  SECTION("two equal contours give the union of their bboxes") {
    const auto box = select_motion_box(
        {contour_with_bbox(1, 1, 3, 3, 4), contour_with_bbox(5, 5, 7, 7, 4)}, 16, 16);
    CHECK(box == MotionBox{1, 1, 7, 7});
  }
  SECTION("three contours keep only the top two by area") {
    const auto box = select_motion_box({contour_with_bbox(1, 1, 4, 4, 9),
                                        contour_with_bbox(5, 5, 7, 7, 4),
                                        contour_with_bbox(12, 12, 15, 15, 1)},
                                       16, 16, 0.0);
    CHECK(box == MotionBox{1, 1, 7, 7});
  }
  SECTION("no contours fall back to the full frame") {
    CHECK(select_motion_box({}, 16, 12) == MotionBox{0, 0, 16, 12});
  }
  SECTION("speckle below the area floor is discarded") {
    // 0.1% of 100x100 is 10 px; a 4-px speck must not outrank emptiness
    CHECK(select_motion_box({contour_with_bbox(1, 1, 3, 3, 4)}, 100, 100) ==
          MotionBox{0, 0, 100, 100});
  }
}

TEST_CASE("iou cases") {
  const MotionBox a{0, 0, 2, 2};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, MotionBox{5, 5, 7, 7}) == 0.0);
  CHECK(iou(MotionBox{0, 0, 2, 2}, MotionBox{1, 0, 3, 2}) == Catch::Approx(1.0 / 3.0));

  SplitMix64 rng(4);
  for (int i = 0; i < 50; ++i) {
    auto rand_box = [&] {
      const int x0 = static_cast<int>(rng.next_below(20));
      const int y0 = static_cast<int>(rng.next_below(20));
      return MotionBox{x0, y0, x0 + 1 + static_cast<int>(rng.next_below(12)),
                       y0 + 1 + static_cast<int>(rng.next_below(12))};
    };
    const MotionBox p = rand_box(), q = rand_box();
    CHECK(iou(p, q) == iou(q, p));
    CHECK(iou(p, q) >= 0.0);
    CHECK(iou(p, q) <= 1.0);
  }
}

TEST_CASE("clip_motion_box falls back to full frame on a static clip") {
  const Frame a = testutil::SineTexture(32, 32, 9).render();
  const std::vector<Frame> frames(4, a);
  const MotionBox box = clip_motion_box(frames, FlowConfig{}, SmoothConfig{});
  CHECK(box == MotionBox{0, 0, 32, 32});
}

TEST_CASE("motion box json roundtrip") {
  const MotionBox b{3, 4, 10, 12};
  nlohmann::json j = b;
  CHECK(j["x0"] == 3);
  CHECK(j["y1"] == 12);
  const MotionBox back = j.get<MotionBox>();
  CHECK(back == b);
}
