#include "doctest.h"

#include <random>

#include "bevmap/error.hpp"
#include "bevmap/masking.hpp"
#include "test_util.hpp"

using namespace bevmap;

namespace {

SemanticGrid uniform_seg(int h, int w, int cls, const ClassCatalog& cat) {
  SemanticGrid g(h, w, cat.size());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) g.at(r, c, cls) = 1.0;
  }
  return g;
}

void set_cell(SemanticGrid& g, int r, int c, int cls) {
  for (double& v : g.cell(r, c)) v = 0.0;
  g.at(r, c, cls) = 1.0;
}

}  // namespace

TEST_CASE("foreground mask follows the argmax class") {
  const auto cat = ClassCatalog::standard();
  const int road = cat.id_of("road");
  const int car = cat.id_of("car");

  CHECK(foreground_mask(uniform_seg(3, 4, road, cat), cat).count() == 0);
  CHECK(foreground_mask(uniform_seg(3, 4, car, cat), cat).count() == 12);

  auto g = uniform_seg(2, 2, road, cat);
  set_cell(g, 1, 0, car);
  const auto m = foreground_mask(g, cat);
  CHECK(m.count() == 1);
  CHECK(m.at(1, 0) == 1);

  CHECK_THROWS_AS(foreground_mask(SemanticGrid(2, 2, 3), cat), ValidationError);
}

TEST_CASE("class mask stack sums to the foreground mask") {
  const auto cat = ClassCatalog::standard();
  auto g = uniform_seg(2, 2, cat.id_of("road"), cat);
  set_cell(g, 0, 1, cat.id_of("car"));
  const auto stack = class_mask_stack(g, cat);
  REQUIRE(stack.channels == 2);
  CHECK(stack.at(0, 1, 0) == 1.0);
  CHECK(stack.at(0, 1, 1) == 0.0);
  CHECK(class_mask_stack(uniform_seg(2, 2, 0, cat), cat).data == std::vector<double>(8, 0.0));

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto seg = testing::random_distribution_grid(6, 9, cat.size(), rng, 0.1);
    const auto fg = foreground_mask(seg, cat);
    const auto st = class_mask_stack(seg, cat);
    for (int r = 0; r < seg.height; ++r) {
      for (int c = 0; c < seg.width; ++c) {
        double sum = 0.0;
        for (int k = 0; k < st.channels; ++k) sum += st.at(r, c, k);
        CHECK(sum == fg.at(r, c));
      }
    }
    // Re-deriving from the argmax one-hot grid gives the same mask.
    const auto rederived = one_hot(argmax_labels(seg, cat.unknown_id()), cat.size());
    CHECK(foreground_mask(rederived, cat) == fg);
  }
}

TEST_CASE("apply_mask replaces only masked cells") {
  std::mt19937_64 rng(3);
  const auto img = testing::random_raster(3, 3, 3, rng);
  CHECK(apply_mask(img, Mask(3, 3), 0.5) == img);
  CHECK(apply_mask(img, Mask(3, 3, 1), 0.5).data == std::vector<double>(27, 0.5));

  Mask one(3, 3);
  one.at(2, 1) = 1;
  const auto out = apply_mask(img, one, 0.5);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < 3; ++k) CHECK(out.at(r, c, k) == (r == 2 && c == 1 ? 0.5 : img.at(r, c, k)));
    }
  }
  CHECK_THROWS_AS(apply_mask(img, Mask(2, 3), 0.0), ValidationError);
}

TEST_CASE("box strategy names parse") {
  const auto s = parse_box_strategy("persp-bg-100-5");
  CHECK(s.geometry == BoxGeometry::kPerspective);
  CHECK(s.region == PlacementRegion::kBackground);
  CHECK(s.object_size == 100);
  CHECK(s.object_count == 5);
  CHECK(parse_box_strategy("none-road-20-1").geometry == BoxGeometry::kNone);
  CHECK_THROWS_AS(parse_box_strategy("persp-sky-10-1"), ValidationError);
  CHECK_THROWS_AS(parse_box_strategy("persp-bg-10"), ValidationError);
  CHECK_THROWS_AS(parse_box_strategy("persp-bg-x-1"), ValidationError);
}

TEST_CASE("random boxes are deterministic and respect placement") {
  const auto cat = ClassCatalog::standard();
  const int h = 60, w = 90;
  auto seg = uniform_seg(h, w, cat.id_of("background"), cat);
  const int road_start = 2 * h / 3;
  for (int r = road_start; r < h; ++r) {
    for (int c = 0; c < w; ++c) set_cell(seg, r, c, cat.id_of("road"));
  }
  BoxSamplingStrategy s{BoxGeometry::kNone, PlacementRegion::kRoad, 6, 8};

  const auto a = sample_random_boxes(s, seg, cat, 11);
  CHECK(a == sample_random_boxes(s, seg, cat, 11));
  REQUIRE(a.size() == 8);
  for (const auto& b : a) {
    CHECK(b.x0 >= 0);
    CHECK(b.x1 <= w);
    CHECK(b.y1 <= h);
    CHECK(b.center_y() >= road_start);
    int overlap = 0;
    for (int r = b.y0; r < b.y1; ++r) {
      for (int c = b.x0; c < b.x1; ++c) overlap += r >= road_start;
    }
    CHECK(overlap >= 0.5 * b.width() * b.height());
  }

  const auto m = boxes_to_mask(a, h, w);
  for (const auto& b : a) CHECK(m.at(b.y0, b.x0) == 1);
}

TEST_CASE("perspective boxes shrink toward the horizon") {
  BoxSamplingStrategy s{BoxGeometry::kPerspective, PlacementRegion::kBackground, 40, 1};
  s.horizon_row = 50;
  CHECK(box_height_at(s, 200, 199) == doctest::Approx(40.0));
  CHECK(box_height_at(s, 200, 50) == doctest::Approx(10.0));
  CHECK(box_height_at(s, 200, 124) == doctest::Approx(40.0 * (1.0 - 0.75 * 75.0 / 149.0)));

  // A sampled box whose bottom sits on the horizon row is object_size/4 tall.
  const auto cat = ClassCatalog::standard();
  auto seg = uniform_seg(200, 120, cat.id_of("background"), cat);
  bool saw_horizon = false;
  for (std::uint64_t seed = 0; seed < 400 && !saw_horizon; ++seed) {
    for (const auto& b : sample_random_boxes(s, seg, cat, seed)) {
      CHECK(b.y1 - 1 >= s.horizon_row);
      if (b.y1 - 1 == s.horizon_row) {
        saw_horizon = true;
        CHECK(std::abs(b.height() - 10) <= 1);
      }
    }
  }
  CHECK(saw_horizon);
}

TEST_CASE("box sampling fails whole when no region exists") {
  const auto cat = ClassCatalog::standard();
  const auto seg = uniform_seg(30, 30, cat.id_of("background"), cat);
  BoxSamplingStrategy s{BoxGeometry::kNone, PlacementRegion::kRoad, 5, 3};
  CHECK_THROWS_AS(sample_random_boxes(s, seg, cat, 1), ValidationError);
  s.object_count = 0;
  CHECK_THROWS_AS(sample_random_boxes(s, seg, cat, 1), ValidationError);
}
