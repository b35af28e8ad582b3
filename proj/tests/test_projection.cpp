#include "doctest.h"

#include <cmath>
#include <random>

#include "bevmap/error.hpp"
#include "bevmap/projection.hpp"
#include "test_util.hpp"

using namespace bevmap;

TEST_CASE("unproject follows the pinhole model") {
  const CameraIntrinsics K{100.0, 80.0, 32.0, 20.0};
  const auto p0 = unproject(32.0, 20.0, 5.0, K);
  CHECK(p0.x == 0.0);
  CHECK(p0.y == 0.0);
  CHECK(p0.z == 5.0);

  const auto p1 = unproject(42.0, 20.0, 10.0, K);
  CHECK(p1.x == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p1.y == 0.0);
  CHECK(p1.z == 10.0);

  CHECK(unproject(32.0 + 7.5, 20.0, 3.0, K).x == -unproject(32.0 - 7.5, 20.0, 3.0, K).x);

  CameraIntrinsics K2 = K;
  K2.fx *= 2.0;
  CHECK(unproject(50.0, 0.0, 4.0, K2).x == doctest::Approx(0.5 * unproject(50.0, 0.0, 4.0, K).x));

  CHECK_THROWS_AS(unproject(0.0, 0.0, 0.0, K), ValidationError);
  CHECK_THROWS_AS(unproject(0.0, 0.0, -1.0, K), ValidationError);
}

TEST_CASE("unproject and reproject round trip") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uf(50.0, 900.0), uc(0.0, 640.0), ud(0.1, 120.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const CameraIntrinsics K{uf(rng), uf(rng), uc(rng), uc(rng)};
    const double u = uc(rng), v = uc(rng);
    const auto [u2, v2] = project_point(unproject(u, v, ud(rng), K), K);
    worst = std::max({worst, std::abs(u2 - u), std::abs(v2 - v)});
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("standard grid binning") {
  const auto cfg = testing::standard_grid();
  CHECK(cfg.res_z() == 0.46875);
  CHECK(cfg.res_x() == 0.46875);
  CHECK(bev_cell_of(0.0, 5.0, cfg) == BevCell{117, 32});
  CHECK(bev_cell_of(0.0, 0.0, cfg) == BevCell{127, 32});
  CHECK(bev_cell_of(-15.0, 0.1, cfg) == BevCell{127, 0});
  CHECK_FALSE(bev_cell_of(0.0, 60.0, cfg));
  CHECK_FALSE(bev_cell_of(15.0, 10.0, cfg));
  CHECK_FALSE(bev_cell_of(-15.01, 10.0, cfg));
  CHECK_FALSE(bev_cell_of(0.0, -0.01, cfg));
  CHECK(bev_cell_of(0.0, 59.999, cfg) == BevCell{0, 32});
}

TEST_CASE("project_to_bev averages contributions") {
  const BevConfig cfg = testing::standard_grid();
  const CameraIntrinsics K{100.0, 100.0, 1.0, 0.0};

  SemanticGrid seg(1, 2, 2);
  seg.at(0, 0, 0) = 1.0;
  seg.at(0, 1, 1) = 1.0;
  DepthMap depth(1, 2);
  depth.set(0, 0, 5.0);
  depth.set(0, 1, 5.0);
  const auto res = project_to_bev(seg, depth, K, cfg);
  CHECK(res.contributed == 2);
  CHECK(res.map.observed.count() == 2);
  // u=0 gives X=-0.05 (col 31), u=1 gives X=0 (col 32): separate cells.
  CHECK(res.map.grid.at(117, 31, 0) == 1.0);
  CHECK(res.map.grid.at(117, 32, 1) == 1.0);

  const CameraIntrinsics K0{100.0, 100.0, 0.0, 0.0};
  SemanticGrid seg2(2, 1, 2);
  seg2.at(0, 0, 0) = 1.0;
  seg2.at(1, 0, 1) = 1.0;
  DepthMap d2(2, 1);
  d2.set(0, 0, 5.0);
  d2.set(1, 0, 5.0);
  const auto res2 = project_to_bev(seg2, d2, K0, cfg);
  CHECK(res2.map.observed.count() == 1);
  CHECK(res2.map.grid.at(117, 32, 0) == 0.5);
  CHECK(res2.map.grid.at(117, 32, 1) == 0.5);

  const auto empty = project_to_bev(seg2, DepthMap(2, 1), K, cfg);
  CHECK(empty.map.observed.count() == 0);
  CHECK(empty.skipped == 2);

  CHECK_THROWS_AS(project_to_bev(seg2, DepthMap(1, 1), K, cfg), ValidationError);
}

TEST_CASE("project_to_bev output invariants on random inputs") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ud(0.5, 70.0), u01(0.0, 1.0);
  const BevConfig cfg{32, 16, 40.0, 20.0};
  const CameraIntrinsics K{60.0, 60.0, 20.0, 10.0};
  for (int trial = 0; trial < 20; ++trial) {
    const auto seg = testing::random_distribution_grid(20, 40, 3, rng, 0.1);
    DepthMap d(20, 40);
    std::size_t valid = 0;
    for (int r = 0; r < 20; ++r) {
      for (int c = 0; c < 40; ++c) {
        if (u01(rng) < 0.8) {
          d.set(r, c, ud(rng));
          ++valid;
        }
      }
    }
    const auto res = project_to_bev(seg, d, K, cfg);
    CHECK(res.map.observed.count() <= valid);
    CHECK(res.contributed + res.skipped == 800);
    CHECK(res.map.observed == observed_cells(res.map.grid));
    CHECK_NOTHROW(check_distribution(res.map.grid, "test"));
  }
}

TEST_CASE("lifting a detection places the prior footprint") {
  const auto cfg = testing::standard_grid();
  const CameraIntrinsics K{100.0, 100.0, 40.0, 30.0};
  DepthMap d(60, 80);
  for (int r = 0; r < 60; ++r) {
    for (int c = 0; c < 80; ++c) d.set(r, c, 10.0);
  }
  // Bottom-center pixel (40, 30) is the principal point.
  const PixelBox box{30, 11, 50, 31};
  const auto rect = lift_bbox_to_bev(box, d, K, BoxPrior{4.0, 2.0}, cfg);
  CHECK(rect.center_col == 32.0);
  CHECK(rect.z_min == 10.0);
  CHECK(rect.z_max == 14.0);
  CHECK(rect.x_min == -1.0);
  CHECK(rect.x_max == 1.0);
  CHECK(rect.col_end - rect.col_begin == 5);   // ceil(2 / 0.46875)
  CHECK(rect.row_end - rect.row_begin == 9);   // ceil(4 / 0.46875)
  // An odd cell count centered on a cell edge cannot be exactly symmetric.
  CHECK(std::abs(rect.col_begin + rect.col_end - 64) <= 1);

  const PixelBox left{10, 11, 30, 31};
  const PixelBox right{50, 11, 70, 31};
  const auto a = lift_bbox_to_bev(left, d, K, BoxPrior{}, cfg);
  const auto b = lift_bbox_to_bev(right, d, K, BoxPrior{}, cfg);
  CHECK(a.x_min == doctest::Approx(-b.x_max));
  CHECK(a.z_min == b.z_min);
  CHECK(a.col_begin == cfg.cols - b.col_end);

  DepthMap far(60, 80);
  for (int r = 0; r < 60; ++r) {
    for (int c = 0; c < 80; ++c) far.set(r, c, 70.0);
  }
  CHECK_THROWS_AS(lift_bbox_to_bev(box, far, K, BoxPrior{}, cfg), ValidationError);
  CHECK_THROWS_AS(lift_bbox_to_bev(box, DepthMap(60, 80), K, BoxPrior{}, cfg), ValidationError);
}
