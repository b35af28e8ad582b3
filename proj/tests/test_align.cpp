#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "bevmap/align.hpp"
#include "bevmap/error.hpp"
#include "bevmap/simulator.hpp"
#include "gradient_suite.hpp"
#include "test_util.hpp"

using namespace bevmap;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// One-hot map of `params` whose content is moved by (d_col, d_row) cells.
BevMap shifted_layout(const LayoutParams& params, const BevConfig& cfg, double d_col, double d_row) {
  SemanticGrid g(cfg.rows, cfg.cols, kLayoutChannels);
  for (int r = 0; r < cfg.rows; ++r) {
    for (int c = 0; c < cfg.cols; ++c) {
      const double x = cfg.cell_center_x(c) - d_col * cfg.res_x();
      const double z = cfg.cell_center_z(r) + d_row * cfg.res_z();
      g.at(r, c, layout_label_at(params, cfg, x, z)) = 1.0;
    }
  }
  return BevMap(std::move(g));
}

LayoutParams crossing() {
  LayoutParams p;
  p.topology = Topology::kXIntersection;
  p.intersection_distance = 25.0;
  p.heading_jitter_deg = 8.0;
  return p;
}

}  // namespace

TEST_CASE("alignment objective fixtures") {
  AlignConfig cfg;
  cfg.lambda2 = cfg.lambda3 = 0.0;
  std::mt19937_64 rng(1);
  const auto m = testing::random_bev_map(6, 5, 3, rng, 0.3);
  CHECK(alignment_objective(m, m, WarpParams::identity(3, 3), cfg).value == 0.0);

  // Four observed cells.
  SemanticGrid a(2, 2, 4);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) a.at(r, c, 0) = 1.0;
  }
  SemanticGrid b = a;  // differs by 0.5 in two channels of one cell
  b.at(1, 1, 0) = 0.5;
  b.at(1, 1, 1) = 0.5;
  SemanticGrid single = a;  // differs by 0.5 in one channel of one cell
  single.at(1, 1, 0) = 0.5;
  CHECK(alignment_objective(BevMap(a), BevMap(single), WarpParams::identity(1, 1), cfg).value == 0.0625);
  CHECK(alignment_objective(BevMap(a), BevMap(b), WarpParams::identity(1, 1), cfg).value == 0.125);

  // Regularizers add lambda2 * Gamma + lambda3 * |theta|^2 on top.
  cfg.lambda2 = 3.0;
  cfg.lambda3 = 2.0;
  WarpParams t = WarpParams::identity(2, 2);
  t.flow.du(0, 0) = 0.5;
  const double mse = alignment_objective(BevMap(a), BevMap(a), t, AlignConfig{0.0, 0.0}).value;
  const double expect = mse + 3.0 * lowpass_regularizer(t.flow).value + 2.0 * 0.25;
  CHECK(alignment_objective(BevMap(a), BevMap(a), t, cfg).value == doctest::Approx(expect).epsilon(1e-14));

  CHECK_THROWS_AS(alignment_objective(BevMap(SemanticGrid(3, 3, 2)), m, WarpParams::identity(), cfg),
                  ValidationError);
}

TEST_CASE("alignment objective gradient") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    INFO("seed " << seed);
    CHECK(testing::check_alignment_objective(seed) < 1e-5);
  }
}

TEST_CASE("objective ignores B_osm outside the warped support") {
  AlignConfig cfg;
  const BevConfig bev{16, 12, 16.0, 12.0};
  const auto init_full = shifted_layout(crossing(), bev, 0, 0);
  // Observe only the lower-left block.
  BevMap init = init_full;
  for (int r = 0; r < bev.rows; ++r) {
    for (int c = 0; c < bev.cols; ++c) {
      if (r < 8 || c >= 6) {
        for (double& v : init.grid.cell(r, c)) v = 0.0;
        init.observed.at(r, c) = 0;
      }
    }
  }
  auto osm = init_full;
  const auto theta = WarpParams::identity(3, 3);
  const double before = alignment_objective(init, osm, theta, cfg).value;
  for (int r = 0; r < 6; ++r) {
    for (int c = 8; c < bev.cols; ++c) osm.grid.at(r, c, 0) = 7.0;
  }
  CHECK(alignment_objective(init, osm, theta, cfg).value == before);
}

TEST_CASE("already aligned inputs stay near identity") {
  const auto cfg_bev = testing::standard_grid();
  const auto m = shifted_layout(crossing(), cfg_bev, 0, 0);
  const auto res = align_osm(m, m, AlignConfig{});
  CHECK(std::abs(res.theta.box.tx) <= 0.25);
  CHECK(std::abs(res.theta.box.ty) <= 0.25);
  CHECK(std::abs(res.theta.box.rotation) <= 0.5 * kDeg);
  CHECK(std::abs(res.theta.box.log_scale) <= 0.01);
}

TEST_CASE("a known shift is recovered") {
  const auto bev = testing::standard_grid();
  // B_init is unobserved in a 6-cell margin, as projected maps are; a fully
  // observed border would be compared against the warp's zero padding.
  auto init = shifted_layout(crossing(), bev, 0, 0);
  for (int r = 0; r < bev.rows; ++r) {
    for (int c = 0; c < bev.cols; ++c) {
      if (r < 6 || r >= bev.rows - 6 || c < 6 || c >= bev.cols - 6) {
        for (double& v : init.grid.cell(r, c)) v = 0.0;
        init.observed.at(r, c) = 0;
      }
    }
  }
  const auto osm = shifted_layout(crossing(), bev, 3, -2);
  const auto res = align_osm(init, osm, AlignConfig{});
  // Undoing a (+3, -2) move of the content needs tx = -3, ty = +2.
  CHECK(std::abs(res.theta.box.tx + 3.0) <= 0.5);
  CHECK(std::abs(res.theta.box.ty - 2.0) <= 0.5);

  for (std::size_t i = 1; i < res.trace.size(); ++i) CHECK(res.trace[i] <= res.trace[i - 1]);
  CHECK(res.objective <= res.trace.front());
}

TEST_CASE("a dominant l2 weight pins theta at zero") {
  const BevConfig bev{32, 16, 30.0, 15.0};
  std::mt19937_64 rng(4);
  AlignConfig cfg;
  cfg.lambda3 = 1e6;
  cfg.max_iters = 60;
  cfg.restarts = 2;
  for (int trial = 0; trial < 3; ++trial) {
    const auto a = testing::random_bev_map(bev.rows, bev.cols, 3, rng, 0.2);
    const auto b = testing::random_bev_map(bev.rows, bev.cols, 3, rng, 0.0);
    const auto res = align_osm(a, b, cfg);
    double norm2 = 0.0;
    for (double v : res.theta.to_vector()) norm2 += v * v;
    CHECK(std::sqrt(norm2) < 1e-3);
  }
}

TEST_CASE("alignment is deterministic and validates its config") {
  const BevConfig bev{32, 16, 30.0, 15.0};
  const auto init = shifted_layout(crossing(), bev, 0, 0);
  const auto osm = shifted_layout(crossing(), bev, 1, 1);
  AlignConfig cfg;
  cfg.max_iters = 30;
  const auto a = align_osm(init, osm, cfg);
  const auto b = align_osm(init, osm, cfg);
  CHECK(a.theta.to_vector() == b.theta.to_vector());
  CHECK(a.trace == b.trace);

  cfg.max_iters = 0;
  CHECK_THROWS_AS(align_osm(init, osm, cfg), ValidationError);
  cfg.max_iters = 10;
  cfg.blur_sigmas = {-1.0};
  CHECK_THROWS_AS(align_osm(init, osm, cfg), ValidationError);
}

TEST_CASE("blurring keeps the mask and per-cell mass") {
  std::mt19937_64 rng(6);
  const auto m = testing::random_bev_map(12, 9, 3, rng, 0.3);
  const auto b = blur_map(m, 1.5);
  CHECK(b.observed == m.observed);
  CHECK_NOTHROW(check_distribution(b.grid, "test"));
  CHECK(blur_map(m, 0.0) == m);
}
