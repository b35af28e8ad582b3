#include "doctest.h"

#include <cmath>
#include <fstream>
#include <cstring>
#include <limits>
#include <random>

#include "bevmap/error.hpp"
#include "bevmap/io.hpp"
#include "test_util.hpp"

using namespace bevmap;

namespace {

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

std::string f64_le(double v) {
  std::string s(8, '\0');
  std::memcpy(s.data(), &v, 8);
  return s;
}

}  // namespace

TEST_CASE("label-pgm round trip is bit-exact") {
  const auto dir = testing::temp_dir("io_pgm");
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = testing::random_labels(1 + trial, 4 + 3 * trial, 256, rng);
    save_label_pgm(g, dir / "a.pgm");
    CHECK(load_label_pgm(dir / "a.pgm") == g);
  }
  LabelGrid g4(4, 4);
  g4.at(1, 2) = 3;
  save_grid(g4, dir / "b.pgm");
  CHECK(std::get<LabelGrid>(load_grid(dir / "b.pgm", GridFormat::kLabelPgm)) == g4);
}

TEST_CASE("pgm header comments are accepted") {
  const auto dir = testing::temp_dir("io_pgm_comment");
  write_bytes(dir / "c.pgm", std::string("P5\n# made by hand\n2 1\n255\n") + '\x01' + '\x02');
  const auto g = load_label_pgm(dir / "c.pgm");
  CHECK(g.width == 2);
  CHECK(g.at(0, 1) == 2);
}

TEST_CASE("prob-bin and depth-bin round trips") {
  const auto dir = testing::temp_dir("io_bin");
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = testing::random_distribution_grid(3 + trial, 2 + trial, 1 + trial % 4, rng, 0.3);
    save_prob_bin(g, dir / "p.bin");
    const auto back = load_prob_bin(dir / "p.bin");
    REQUIRE(back.same_shape(g));
    for (std::size_t i = 0; i < g.data.size(); ++i) CHECK(std::abs(back.data[i] - g.data[i]) <= 1e-7);

    DepthMap d(2 + trial, 5);
    std::uniform_real_distribution<double> u(0.1, 80.0);
    for (int r = 0; r < d.height; ++r) {
      for (int c = 0; c < d.width; ++c) {
        if (u(rng) > 20.0) d.set(r, c, u(rng));
      }
    }
    save_depth_bin(d, dir / "d.bin");
    const auto db = load_depth_bin(dir / "d.bin");
    CHECK(db.valid == d.valid);
    for (std::size_t i = 0; i < d.depth.size(); ++i) {
      if (d.valid[i]) CHECK(std::abs(db.depth[i] - d.depth[i]) <= 1e-7);
    }
  }
}

TEST_CASE("malformed files are rejected with the load stage") {
  const auto dir = testing::temp_dir("io_bad");
  auto expect_load_error = [](auto&& fn) {
    try {
      fn();
      FAIL("expected a ValidationError");
    } catch (const ValidationError& e) {
      CHECK(e.stage() == "load");
    }
  };

  SUBCASE("prob row summing to 0.8") {
    write_bytes(dir / "p.bin", "PROB 1 1 2\n" + f64_le(0.5) + f64_le(0.3));
    expect_load_error([&] { load_prob_bin(dir / "p.bin"); });
  }
  SUBCASE("prob negative entry") {
    write_bytes(dir / "p.bin", "PROB 1 1 2\n" + f64_le(-0.5) + f64_le(1.5));
    expect_load_error([&] { load_prob_bin(dir / "p.bin"); });
  }
  SUBCASE("prob dimension mismatch") {
    write_bytes(dir / "p.bin", "PROB 2 1 2\n" + f64_le(0.5) + f64_le(0.5));
    expect_load_error([&] { load_prob_bin(dir / "p.bin"); });
  }
  SUBCASE("prob bad header") {
    write_bytes(dir / "p.bin", "PROBX 1 1 1\n" + f64_le(1.0));
    expect_load_error([&] { load_prob_bin(dir / "p.bin"); });
    write_bytes(dir / "p.bin", "PROB 1 -1 1\n" + f64_le(1.0));
    expect_load_error([&] { load_prob_bin(dir / "p.bin"); });
  }
  SUBCASE("negative depth at a valid cell") {
    write_bytes(dir / "d.bin", "DEPTH 1 2\n" + f64_le(3.0) + f64_le(-1.0));
    expect_load_error([&] { load_depth_bin(dir / "d.bin"); });
  }
  SUBCASE("depth truncated payload") {
    write_bytes(dir / "d.bin", "DEPTH 2 2\n" + f64_le(3.0));
    expect_load_error([&] { load_depth_bin(dir / "d.bin"); });
  }
  SUBCASE("pgm variants") {
    write_bytes(dir / "a.pgm", "P2\n1 1\n255\n1");
    expect_load_error([&] { load_label_pgm(dir / "a.pgm"); });
    write_bytes(dir / "a.pgm", "P5\n2 2\n255\n\x01");
    expect_load_error([&] { load_label_pgm(dir / "a.pgm"); });
    write_bytes(dir / "a.pgm", "P5\n1 1\n65535\n\x01\x01");
    expect_load_error([&] { load_label_pgm(dir / "a.pgm"); });
    write_bytes(dir / "a.pgm", "P5\n1 1\n3\n\x09");
    expect_load_error([&] { load_label_pgm(dir / "a.pgm"); });
  }
  SUBCASE("missing file") {
    expect_load_error([&] { load_depth_bin(dir / "nope.bin"); });
  }
}

TEST_CASE("depth NaN encodes invalid cells") {
  const auto dir = testing::temp_dir("io_nan");
  write_bytes(dir / "d.bin", "DEPTH 1 2\n" + f64_le(std::numeric_limits<double>::quiet_NaN()) + f64_le(4.0));
  const auto d = load_depth_bin(dir / "d.bin");
  CHECK_FALSE(d.is_valid(0, 0));
  CHECK(d.is_valid(0, 1));
  CHECK(d.at(0, 1) == 4.0);
}
