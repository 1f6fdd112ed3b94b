#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dlpp/geodesic.hpp"
#include "dlpp/grid.hpp"
#include "dlpp/oracle.hpp"
#include "dlpp/passage.hpp"

using namespace dlpp;

namespace {

// Weights listed row by row, bottom row (y = 1) first.
WeightGrid make_grid(int cols, int rows, std::vector<Weight> weights, Weight hi_cutoff = 0) {
  return WeightGrid(GridShape::with_rows(cols, rows), std::move(weights), hi_cutoff);
}

// w(1,1)=1, w(2,1)=3, w(1,2)=2, w(2,2)=4
WeightGrid two_by_two() { return make_grid(2, 2, {1, 3, 2, 4}); }

WeightGrid random_grid(int cols, int rows, RandomStream& rng, Weight max_weight = 3) {
  std::vector<Weight> w(static_cast<std::size_t>(cols * rows));
  for (auto& x : w) x = static_cast<Weight>(rng.below(static_cast<std::uint64_t>(max_weight + 1)));
  return make_grid(cols, rows, std::move(w), max_weight / 2);
}

}  // namespace

TEST_CASE("grid shape rows use a nudged floor of n^alpha") {
  CHECK(rows_for(16, 0.75) == 8);
  CHECK(rows_for(64, 0.25) == 2);
  CHECK(rows_for(256, 0.25) == 4);
  CHECK(rows_for(1024, 0.25) == 5);
  CHECK(rows_for(1000, 1.0 / 3.0) == 10);
  CHECK(rows_for(1, 0.5) == 1);
  CHECK(GridShape::from_alpha(4, 0.5).rows == 2);
  CHECK_THROWS(GridShape::from_alpha(0, 0.5));
  CHECK_THROWS(GridShape::from_alpha(4, 0.0));
  CHECK_THROWS(GridShape::with_rows(2, 3));
}

TEST_CASE("sample_grid is a pure function of the stream") {
  const auto model = WeightModel::bernoulli(0.5);
  const auto shape = GridShape::with_rows(1, 1);
  RandomStream a(5), b(5);
  CHECK(sample_grid(shape, model, a).weights() == sample_grid(shape, model, b).weights());
  CHECK(a.block_position() == 1);  // a 1x1 grid consumes one draw

  const auto big = GridShape::with_rows(64, 8);
  RandomStream c(9), d(9);
  CHECK(sample_grid(big, model, c).weights() == sample_grid(big, model, d).weights());
}

TEST_CASE("per-site mean of the two-point grid") {
  const auto model = WeightModel::bernoulli(0.5);
  const auto shape = GridShape::with_rows(64, 8);
  long long total = 0;
  const int reps = 10000;
  for (int r = 0; r < reps; ++r) {
    RandomStream rng(StreamKey{77, 0, 0, static_cast<std::uint32_t>(r)});
    const auto grid = sample_grid(shape, model, rng);
    for (auto w : grid.weights()) total += w;
  }
  const double per_site = static_cast<double>(total) / (reps * 512.0);
  CHECK(per_site == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("last passage on hand-checked grids") {
  CHECK(last_passage(make_grid(1, 1, {5})).value == 5);
  const auto grid = two_by_two();
  const auto result = last_passage(grid);
  CHECK(result.value == 8);
  CHECK(result.backward.front() == 8);
  CHECK(last_passage_value(grid) == 8);
  CHECK(last_passage(make_grid(5, 1, {1, 2, 3, 4, 5})).value == 15);
}

TEST_CASE("path enumeration oracle") {
  CHECK(enumerate_paths_lpp(two_by_two()) == 8);
  CHECK(enumerate_paths_lpp(make_grid(3, 2, {1, 1, 1, 1, 1, 1})) == 4);
  CHECK(directed_path_count(GridShape::with_rows(5, 4)) == 35);
  CHECK(directed_path_count(GridShape::with_rows(64, 8)) == 1'198'774'720ull);
  CHECK_THROWS_AS(enumerate_paths(make_grid(64, 8, std::vector<Weight>(512, 0))), std::length_error);
}

TEST_CASE("DP equals exhaustive enumeration on 1000 random 5x4 grids") {
  RandomStream rng(31);
  for (int k = 0; k < 1000; ++k) {
    const auto grid = random_grid(5, 4, rng);
    const auto result = last_passage(grid);
    const auto enumeration = enumerate_paths(grid);
    REQUIRE(enumeration.paths_visited == 35);
    REQUIRE(enumeration.best == result.value);
    REQUIRE(last_passage_value(grid) == result.value);
    // forward + backward - w never exceeds L
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 5; ++x) REQUIRE(result.through(grid, x, y) <= result.value);
  }
}

TEST_CASE("monotonicity: raising one weight by delta moves L by 0..delta") {
  RandomStream rng(32);
  for (int k = 0; k < 500; ++k) {
    auto grid = random_grid(7, 3, rng, 5);
    const Weight before = last_passage_value(grid);
    const auto site = static_cast<std::size_t>(rng.below(grid.weights().size()));
    const Weight delta = static_cast<Weight>(rng.below(6));
    grid.set(site, grid.weights()[site] + delta);
    const Weight after = last_passage_value(grid);
    REQUIRE(after >= before);
    REQUIRE(after - before <= delta);
  }
}

TEST_CASE("hi-mode maximum") {
  CHECK(hi_mode_max(make_grid(4, 2, std::vector<Weight>(8, 1))) == 5);
  CHECK(hi_mode_max(make_grid(4, 2, std::vector<Weight>(8, 0))) == 0);
  CHECK(hi_mode_max(make_grid(2, 2, {1, 0, 0, 1})) == 2);
  RandomStream rng(33);
  for (int k = 0; k < 300; ++k) {
    const auto grid = random_grid(6, 3, rng);
    const int m = hi_mode_max(grid);
    REQUIRE(m <= std::min<int>(grid.shape().path_length(), static_cast<int>(grid.hi_count())));
  }
}

TEST_CASE("geodesics on hand-checked grids") {
  SUBCASE("two optimal paths share only the corners") {
    const auto grid = make_grid(2, 2, {1, 0, 0, 1});
    const auto set = geodesics(grid, last_passage(grid));
    CHECK(set.intersection == std::vector<Vertex>{{0, 0}, {1, 1}});
    CHECK(set.on_geodesic_per_diagonal == std::vector<int>{1, 2, 1});
    // Ties are resolved towards the e1 step into the current vertex.
    CHECK(set.canonical == std::vector<Vertex>{{0, 0}, {0, 1}, {1, 1}});
    const auto up = geodesics(grid, last_passage(grid), TieBreak::kPreferUp);
    CHECK(up.canonical == std::vector<Vertex>{{0, 0}, {1, 0}, {1, 1}});
  }
  SUBCASE("unique geodesic") {
    const auto grid = two_by_two();
    const auto set = geodesics(grid, last_passage(grid));
    CHECK(set.canonical == std::vector<Vertex>{{0, 0}, {1, 0}, {1, 1}});
    CHECK(set.intersection == set.canonical);
  }
  SUBCASE("single row") {
    const auto grid = make_grid(4, 1, {3, 1, 4, 1});
    const auto set = geodesics(grid, last_passage(grid));
    CHECK(set.intersection.size() == 4);
    CHECK(set.canonical.size() == 4);
  }
}

TEST_CASE("geodesic structure against enumeration on 500 random small grids") {
  RandomStream rng(34);
  for (int k = 0; k < 500; ++k) {
    const int cols = 2 + static_cast<int>(rng.below(5));
    const int rows = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(cols, 4))));
    const auto grid = random_grid(cols, rows, rng, 2);
    const auto result = last_passage(grid);
    const auto set = geodesics(grid, result);
    REQUIRE(set.canonical.size() == static_cast<std::size_t>(cols + rows - 1));
    REQUIRE(set.intersection.size() <= static_cast<std::size_t>(cols + rows - 1));
    Weight sum = 0;
    for (const auto& v : set.canonical) sum += grid.at(v);
    REQUIRE(sum == result.value);
    for (const auto& v : set.intersection)
      REQUIRE(std::find(set.canonical.begin(), set.canonical.end(), v) != set.canonical.end());
    REQUIRE(set.intersection == enumerate_paths(grid).intersection);
  }
}

TEST_CASE("cylinder restriction") {
  RandomStream rng(35);
  SUBCASE("covering widths reproduce L") {
    for (int k = 0; k < 300; ++k) {
      const auto grid = random_grid(8, 4, rng);
      REQUIRE(cylinder_last_passage(grid, 4) == last_passage_value(grid));
    }
    const auto row = make_grid(5, 1, {1, 2, 3, 4, 5});
    CHECK(cylinder_last_passage(row, 1) == 15);
  }
  SUBCASE("monotone in width and bounded by L") {
    for (int k = 0; k < 200; ++k) {
      const auto grid = random_grid(16, 6, rng);
      const Weight full = last_passage_value(grid);
      Weight previous = 0;
      for (int width = 1; width <= 6; ++width) {
        const Weight value = cylinder_last_passage(grid, width);
        REQUIRE(value >= previous);
        REQUIRE(value <= full);
        previous = value;
      }
      REQUIRE(previous == full);
    }
  }
  SUBCASE("narrow cylinder can lose the geodesic") {
    // The only heavy vertex sits in the top-left corner, far off the diagonal.
    std::vector<Weight> w(8 * 4, 0);
    w[3 * 8 + 0] = 10;
    const auto grid = make_grid(8, 4, w);
    CHECK(last_passage_value(grid) == 10);
    CHECK(cylinder_last_passage(grid, 1) == 0);
    CHECK_FALSE(in_cylinder(grid.shape(), 0, 3, 1));
  }
  CHECK_THROWS(cylinder_last_passage(two_by_two(), 0));
}

TEST_CASE("incremental flips") {
  SUBCASE("hand-checked") {
    auto grid = two_by_two();
    auto result = last_passage(grid);
    apply_flip(grid, result, Vertex{0, 1}, 9);
    CHECK(result.value == 14);
    CHECK_FALSE(result.has_backward());
    CHECK_THROWS_AS(apply_flip(grid, result, Vertex{0, 1}, 2), std::invalid_argument);
  }
  SUBCASE("off-geodesic raise leaves L alone") {
    auto grid = make_grid(3, 2, {5, 5, 5, 0, 0, 5});
    auto result = last_passage(grid);
    apply_flip(grid, result, Vertex{0, 1}, 1);
    CHECK(result.value == 20);
  }
  SUBCASE("10^4 random raises on random 32x8 grids") {
    RandomStream rng(36);
    for (int g = 0; g < 20; ++g) {
      auto grid = random_grid(32, 8, rng, 2);
      auto result = last_passage(grid);
      for (int f = 0; f < 500; ++f) {
        const auto site = static_cast<std::size_t>(rng.below(256));
        const Vertex v{static_cast<int>(site % 32), static_cast<int>(site / 32)};
        apply_flip(grid, result, v, grid.weights()[site] + static_cast<Weight>(rng.below(4)));
        const auto fresh = last_passage(grid);
        REQUIRE(result.value == fresh.value);
        REQUIRE(result.forward == fresh.forward);
      }
    }
  }
}

TEST_CASE("grid dump format") {
  std::ostringstream out;
  dump_grid(out, two_by_two());
  CHECK(out.str() == "1 3\n2 4\n");
}
