#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <sstream>

#include "mofo/flo_io.hpp"
#include "mofo/flow.hpp"
#include "testutil.hpp"

using namespace mofo;
using testutil::SineTexture;

namespace {
double mean_norm(const FlowField& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    s += std::sqrt(static_cast<double>(f.u[i]) * f.u[i] + static_cast<double>(f.v[i]) * f.v[i]);
  return s / static_cast<double>(f.size());
}
}  // namespace

TEST_CASE("flow of identical textured frames is near zero") {
  const Frame a = SineTexture(64, 64, 7).render();
  const FlowField f = estimate_flow(a, a, FlowConfig{});
  CHECK(mean_norm(f) < 1e-2);
}

TEST_CASE("flow recovers a known circular shift") {
  const SineTexture tex(64, 64, 11);
  const Frame prev = tex.render();
  const Frame next = tex.render(2.0, 0.0);
  const FlowField f = estimate_flow(prev, next, FlowConfig{});
  CHECK(testutil::mean_epe(f, 2.0, 0.0, 8) < 0.3);
}

TEST_CASE("flow of constant frames is near zero") {
  const Frame a(32, 32, 0.5f);
  const Frame b(32, 32, 0.5f);
  const FlowField f = estimate_flow(a, b, FlowConfig{});
  CHECK(mean_norm(f) < 1e-2);
}

TEST_CASE("flow rejects bad inputs") {
  const Frame a = SineTexture(32, 32, 3).render();
  const Frame b = SineTexture(32, 48, 3).render();
  CHECK_THROWS_AS(estimate_flow(a, b, FlowConfig{}), std::invalid_argument);

  Frame nan_frame = a;
  nan_frame.at(5, 5) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(estimate_flow(a, nan_frame, FlowConfig{}), std::invalid_argument);

  FlowConfig bad;
  bad.tau = 1.0f;
  bad.theta = 1.0f;  // tau*theta > 1/8
  CHECK_THROWS_AS(estimate_flow(a, a, bad), std::invalid_argument);
}

TEST_CASE("flow is deterministic") {
  const SineTexture tex(48, 40, 19);
  const Frame prev = tex.render();
  const Frame next = tex.render(1.0, 1.0);
  const FlowField f1 = estimate_flow(prev, next, FlowConfig{});
  const FlowField f2 = estimate_flow(prev, next, FlowConfig{});
  CHECK(f1.u == f2.u);
  CHECK(f1.v == f2.v);
}

TEST_CASE("energy is non-increasing across warps within a level") {
  const SineTexture tex(64, 64, 23);
  const Frame prev = tex.render();
  const Frame next = tex.render(2.0, 1.0);
  FlowConfig cfg;
  cfg.warps_per_level = 8;
  FlowDiagnostics diag;
  estimate_flow(prev, next, cfg, &diag);
  REQUIRE_FALSE(diag.levels.empty());
  for (const auto& level : diag.levels) {
    REQUIRE(level.warp_energies.size() == 8);
    for (std::size_t k = 1; k < level.warp_energies.size(); ++k) {
      CHECK(level.warp_energies[k] <= level.warp_energies[k - 1] + cfg.stop_epsilon);
    }
  }
}

TEST_CASE("clip_flows counts and degenerate inputs") {
  const Frame a = SineTexture(32, 32, 5).render();

  SECTION("16 identical frames give 15 near-zero fields") {
    const std::vector<Frame> frames(16, a);
    const auto fields = clip_flows(frames, FlowConfig{});
    REQUIRE(fields.size() == 15);
    for (const auto& f : fields) CHECK(mean_norm(f) < 1e-2);
  }
  SECTION("two frames give exactly one field") {
    const auto fields = clip_flows({a, a}, FlowConfig{});
    CHECK(fields.size() == 1);
  }
  SECTION("fewer than two frames is rejected") {
    CHECK_THROWS_AS(clip_flows({a}, FlowConfig{}), std::invalid_argument);
  }
}

TEST_CASE("constant-velocity pan yields matching uniform fields") {
  const SineTexture tex(64, 64, 31);
  const std::vector<Frame> frames{tex.render(), tex.render(2.0, 0.0), tex.render(4.0, 0.0)};
  const auto fields = clip_flows(frames, FlowConfig{});
  REQUIRE(fields.size() == 2);
  CHECK(testutil::mean_epe(fields[0], 2.0, 0.0, 8) < 0.3);
  CHECK(testutil::mean_epe(fields[1], 2.0, 0.0, 8) < 0.3);
}

TEST_CASE("flo roundtrip is bit-identical") {
  const SineTexture tex(24, 16, 41);
  const FlowField f = estimate_flow(tex.render(), tex.render(1.0, 0.0), FlowConfig{});
  std::stringstream ss;
  write_flo(f, ss);
  const FlowField g = read_flo(ss);
  CHECK(g.width == f.width);
  CHECK(g.height == f.height);
  CHECK(std::memcmp(g.u.data(), f.u.data(), f.size() * 4) == 0);
  CHECK(std::memcmp(g.v.data(), f.v.data(), f.size() * 4) == 0);
}

TEST_CASE("flo header layout") {
  FlowField f(2, 1);
  f.u = {1.0f, 2.0f};
  f.v = {3.0f, 4.0f};
  std::stringstream ss;
  write_flo(f, ss);
  const std::string bytes = ss.str();
  REQUIRE(bytes.size() == 28);  // 4 magic + 8 dims + 16 payload

  float magic = 0.0f;
  std::memcpy(&magic, bytes.data(), 4);
  CHECK(magic == 202021.25f);

  std::uint32_t w = 0, h = 0;
  std::memcpy(&w, bytes.data() + 4, 4);
  std::memcpy(&h, bytes.data() + 8, 4);
  CHECK(w == 2);
  CHECK(h == 1);
}

TEST_CASE("flo errors carry byte offsets") {
  SECTION("bad magic") {
    std::stringstream ss;
    detail::put_f32le(ss, 1.0f);
    detail::put_u32le(ss, 1);
    detail::put_u32le(ss, 1);
    CHECK_THROWS_AS(read_flo(ss), FormatError);
  }
  SECTION("truncated payload") {
    FlowField f(4, 4);
    std::stringstream ss;
    write_flo(f, ss);
    const std::string whole = ss.str();
    std::stringstream cut(whole.substr(0, whole.size() - 6));
    try {
      read_flo(cut);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.byte_offset() >= 12);
    }
  }
}
