#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "bevmap/warp.hpp"
#include "gradient_suite.hpp"
#include "test_util.hpp"

using namespace bevmap;

namespace {

std::vector<GridCoord> identity_coords(int rows, int cols) {
  std::vector<GridCoord> c;
  for (int r = 0; r < rows; ++r) {
    for (int col = 0; col < cols; ++col) c.push_back({double(r), double(col)});
  }
  return c;
}

// Vertical one-hot bar of class 0 at columns [c0, c0 + width) over class 1.
BevMap bar_map(int rows, int cols, int c0, int width) {
  SemanticGrid g(rows, cols, 2);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) g.at(r, c, (c >= c0 && c < c0 + width) ? 0 : 1) = 1.0;
  }
  return BevMap(std::move(g));
}

}  // namespace

TEST_CASE("bilinear sampling fixtures") {
  std::mt19937_64 rng(1);
  const auto g = testing::random_raster(5, 6, 2, rng);
  CHECK(bilinear_sample(g, identity_coords(5, 6), 5, 6) == g);

  Raster col(3, 3, 1);
  col.at(1, 2) = 2.0;
  col.at(2, 2) = 4.0;
  const GridCoord mid{1.5, 2.0};
  CHECK(bilinear_sample(col, std::span(&mid, 1), 1, 1).at(0, 0) == 3.0);

  const GridCoord far{-5.0, -5.0};
  CHECK(bilinear_sample(g, std::span(&far, 1), 1, 1).data == std::vector<double>{0.0, 0.0});

  // Half a cell outside the border blends with zero padding.
  Raster ones(2, 2, 1, 1.0);
  const GridCoord edge{-0.5, 0.0};
  CHECK(bilinear_sample(ones, std::span(&edge, 1), 1, 1).at(0, 0) == 0.5);
}

TEST_CASE("box coordinate map") {
  const auto id = box_coordinate_map(BoxParams{}, 6, 4);
  const auto ref = identity_coords(6, 4);
  for (std::size_t i = 0; i < id.size(); ++i) {
    CHECK(id[i].row == doctest::Approx(ref[i].row).epsilon(1e-15));
    CHECK(id[i].col == doctest::Approx(ref[i].col).epsilon(1e-15));
  }

  const auto shifted = box_coordinate_map(BoxParams{2.0, 0.0, 0.0, 0.0}, 6, 4);
  for (std::size_t i = 0; i < id.size(); ++i) {
    CHECK(shifted[i].col == doctest::Approx(ref[i].col - 2.0));
    CHECK(shifted[i].row == doctest::Approx(ref[i].row));
  }

  const auto flipped = box_coordinate_map(BoxParams{0.0, 0.0, std::numbers::pi, 0.0}, 5, 5);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {
      CHECK(flipped[r * 5 + c].row == doctest::Approx(4 - r));
      CHECK(flipped[r * 5 + c].col == doctest::Approx(4 - c));
    }
  }

  // log_scale = ln 2 doubles content about the center, so sources contract.
  const auto zoom = box_coordinate_map(BoxParams{0.0, 0.0, 0.0, std::log(2.0)}, 5, 5);
  CHECK(zoom[0].row == doctest::Approx(1.0));
  CHECK(zoom[0].col == doctest::Approx(1.0));
}

TEST_CASE("compose_and_warp fixtures") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = testing::random_bev_map(8, 6, 3, rng, 0.2);
    const auto w = compose_and_warp(m, WarpParams::identity(3, 3));
    CHECK(w.observed == m.observed);
    for (std::size_t i = 0; i < m.grid.data.size(); ++i) CHECK(std::abs(w.grid.data[i] - m.grid.data[i]) <= 1e-12);
  }

  const auto bar = bar_map(10, 12, 3, 2);
  WarpParams tx = WarpParams::identity(3, 3);
  tx.box.tx = 3.0;
  const auto moved = compose_and_warp(bar, tx);
  const auto expect = bar_map(10, 12, 6, 2);
  for (int r = 0; r < 10; ++r) {
    for (int c = 3; c < 12; ++c) {
      CHECK(moved.grid.at(r, c, 0) == doctest::Approx(expect.grid.at(r, c, 0)));
    }
    // The three columns shifted in from outside carry no evidence.
    for (int c = 0; c < 3; ++c) CHECK(moved.observed.at(r, c) == 0);
  }

  std::mt19937_64 rng2(3);
  const auto m = testing::random_bev_map(9, 7, 3, rng2, 0.0);
  for (double k : {1.0, -0.6, 0.35}) {
    WarpParams flow = WarpParams::identity(3, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) flow.flow.du(i, j) = k;
    }
    WarpParams box = WarpParams::identity(3, 3);
    box.box.ty = k;
    const auto a = warp_raster(m.grid, flow);
    const auto b = warp_raster(m.grid, box);
    for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("warping never creates mass") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = testing::random_bev_map(8, 8, 3, rng, 0.0);
    WarpParams theta;
    theta.box = testing::random_box(rng);
    theta.flow = testing::random_flow(3, 3, rng, 1.5);
    const auto out = warp_raster(m.grid, theta);
    for (int r = 0; r < 8; ++r) {
      for (int c = 0; c < 8; ++c) {
        const double mass = out.cell_mass(r, c);
        CHECK(mass >= -1e-12);
        CHECK(mass <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("lowpass regularizer fixtures") {
  FlowField constant(3, 3);
  for (double& v : constant.data) v = 0.7;
  CHECK(lowpass_regularizer(constant).value == 0.0);

  // Spike of 1 in du at the center: four unit differences among
  // 2 components x (3*2 + 2*3) differences = 24 terms.
  FlowField spike(3, 3);
  spike.du(1, 1) = 1.0;
  CHECK(lowpass_regularizer(spike).value == doctest::Approx(4.0 / 24.0).epsilon(1e-15));

  // A ramp in du along columns: only the 6 column differences of du are
  // nonzero, each equal to the slope.
  for (double offset : {0.0, 2.5, -7.0}) {
    FlowField ramp(3, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) ramp.du(i, j) = offset + 0.5 * j;
    }
    CHECK(lowpass_regularizer(ramp).value == doctest::Approx(6.0 * 0.25 / 24.0).epsilon(1e-15));
  }
}

TEST_CASE("l2 regularizer fixtures") {
  CHECK(l2_regularizer(WarpParams::identity()).value == 0.0);
  WarpParams t = WarpParams::identity(2, 2);
  t.box.tx = 3.0;
  CHECK(l2_regularizer(t).value == 9.0);

  std::mt19937_64 rng(5);
  t.box = testing::random_box(rng);
  t.flow = testing::random_flow(2, 2, rng, 1.0);
  const auto g = l2_regularizer(t).gradient.to_vector();
  const auto v = t.to_vector();
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(g[i] == 2.0 * v[i]);
}

TEST_CASE("warp gradients match finite differences") {
  for (const auto& c : testing::gradient_cases()) {
    if (c.name.find("warp") == std::string::npos && c.name != "bilinear sampling" &&
        c.name.find("regularizer") == std::string::npos) {
      continue;
    }
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      INFO(c.name << " seed " << seed);
      CHECK(c.run(seed) < 1e-5);
    }
  }
}

TEST_CASE("theta flattening round trips") {
  std::mt19937_64 rng(6);
  WarpParams t;
  t.box = testing::random_box(rng);
  t.flow = testing::random_flow(8, 4, rng, 1.0);
  WarpParams u = WarpParams::identity(8, 4);
  u.assign(t.to_vector());
  CHECK(u.to_vector() == t.to_vector());
  CHECK(u.size() == 4 + 64);
}
