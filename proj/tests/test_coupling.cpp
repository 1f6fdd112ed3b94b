#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dlpp/coupling.hpp"
#include "dlpp/passage.hpp"
#include "dlpp/stats.hpp"

using namespace dlpp;

namespace {

// Exact law of L on a 2x2 grid of i.i.d. Bernoulli(p) weights, by listing
// all 16 configurations. The two paths are right-then-up and up-then-right.
std::array<double, 4> exact_two_by_two_law(double p) {
  std::array<double, 4> law{};
  for (int mask = 0; mask < 16; ++mask) {
    const int w00 = mask & 1, w10 = (mask >> 1) & 1, w01 = (mask >> 2) & 1, w11 = (mask >> 3) & 1;
    const int hi = w00 + w10 + w01 + w11;
    const int L = w00 + std::max(w10, w01) + w11;
    law[static_cast<std::size_t>(L)] += std::pow(p, hi) * std::pow(1 - p, 4 - hi);
  }
  return law;
}

}  // namespace

TEST_CASE("trajectories on tiny grids") {
  const auto model = WeightModel::bernoulli(0.5);
  RandomStream rng(1);
  const auto single = build_trajectory(GridShape::with_rows(1, 1), model, rng);
  CHECK(single.L == std::vector<Weight>{0, 1});
  for (int rep = 0; rep < 20; ++rep) {
    const auto row = build_trajectory(GridShape::with_rows(2, 1), model, rng);
    CHECK(row.L == std::vector<Weight>{0, 1, 2});
  }
}

TEST_CASE("single-row trajectories satisfy L(k) = k exactly") {
  const auto model = WeightModel::bernoulli(0.3);
  RandomStream rng(2);
  for (int cols = 1; cols <= 12; ++cols) {
    const auto t = build_trajectory(GridShape::with_rows(cols, 1), model, rng);
    for (std::size_t k = 0; k < t.L.size(); ++k) REQUIRE(t.L[k] == static_cast<Weight>(k));
  }
}

TEST_CASE("monotone coupling and endpoint") {
  const auto model = WeightModel::make({{0, 0.2}, {0.5, 0.3}, {1, 0.3}, {2.5, 0.2}}, 0.5);
  RandomStream rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const auto t = build_trajectory(GridShape::with_rows(16, 4), model, rng);
    REQUIRE(t.flip_order.size() == 64);
    auto sorted = t.flip_order;
    std::sort(sorted.begin(), sorted.end());
    for (std::uint32_t k = 0; k < 64; ++k) REQUIRE(sorted[k] == k);
    for (std::size_t k = 0; k + 1 < t.L.size(); ++k) {
      REQUIRE(t.L[k + 1] - t.L[k] >= 0);
      REQUIRE(t.L[k + 1] - t.L[k] <= model.scaled_max());
      REQUIRE(t.M[k + 1] - t.M[k] >= 0);
      REQUIRE(t.M[k + 1] - t.M[k] <= 1);
    }
    const WeightGrid all_hi(t.shape, t.hi_values, model.hi_cutoff());
    REQUIRE(t.L.back() == last_passage_value(all_hi));
    REQUIRE(t.M.back() == t.shape.path_length());
    REQUIRE(t.grid_at(10).hi_count() == 10);
  }
}

TEST_CASE("incremental and full-recompute trajectories agree on 100 random cases") {
  const std::vector<WeightModel> models = {WeightModel::bernoulli(0.5), WeightModel::bernoulli(0.2),
                                           WeightModel::make({{0, 0.25}, {1, 0.25}, {2, 0.5}}, 1.0),
                                           WeightModel::make({{0.1, 0.4}, {0.7, 0.35}, {1.3, 0.25}}, 0.5)};
  RandomStream picker(4);
  for (std::uint32_t c = 0; c < 100; ++c) {
    const int cols = 1 + static_cast<int>(picker.below(64));
    const int rows = 1 + static_cast<int>(picker.below(static_cast<std::uint64_t>(std::min(cols, 8))));
    const auto& model = models[picker.below(models.size())];
    const auto shape = GridShape::with_rows(cols, rows);
    RandomStream a(StreamKey{4, 0, 0, c}), b(StreamKey{4, 0, 0, c});
    const auto inc = build_trajectory(shape, model, a, TrajectoryMode::kIncremental);
    const auto full = build_trajectory(shape, model, b, TrajectoryMode::kFullRecompute);
    REQUIRE(inc.flip_order == full.flip_order);
    REQUIRE(inc.L == full.L);
    REQUIRE(inc.M == full.M);
  }
}

TEST_CASE("evaluate_at_N on a single row reproduces Binomial(2, 1/2)") {
  const auto model = WeightModel::bernoulli(0.5);
  const auto shape = GridShape::with_rows(2, 1);
  std::vector<std::uint64_t> counts(3, 0);
  for (std::uint32_t s = 0; s < 20000; ++s) {
    RandomStream traj(StreamKey{5, 0, 0, s}), draw(StreamKey{5, 0, 1, s});
    const auto t = build_trajectory(shape, model, traj, TrajectoryMode::kIncremental, false);
    const auto [n, L] = evaluate_at_N(t, draw);
    REQUIRE(L == static_cast<Weight>(n));
    ++counts[static_cast<std::size_t>(L)];
  }
  const std::vector<double> pmf = {0.25, 0.5, 0.25};
  CHECK(chi_square_test(counts, pmf).p_value > 0.001);
}

TEST_CASE("coupled L on the 2x2 grid matches the 16-configuration law") {
  const double p = 0.4;
  const auto model = WeightModel::bernoulli(p);
  const auto shape = GridShape::with_rows(2, 2);
  const auto law = exact_two_by_two_law(p);
  double total = 0.0;
  for (double q : law) total += q;
  CHECK(total == doctest::Approx(1.0));

  std::vector<std::uint64_t> counts(4, 0);
  for (std::uint32_t s = 0; s < 100000; ++s) {
    RandomStream traj(StreamKey{6, 0, 0, s}), draw(StreamKey{6, 0, 1, s});
    const auto t = build_trajectory(shape, model, traj, TrajectoryMode::kIncremental, false);
    ++counts[static_cast<std::size_t>(evaluate_at_N(t, draw).second)];
  }
  const auto result = chi_square_test(counts, std::vector<double>(law.begin(), law.end()));
  MESSAGE("chi-square " << result.statistic << " p=" << result.p_value);
  CHECK(result.p_value > 0.001);
}

TEST_CASE("exchangeability of L(k) across independent flip orders") {
  const auto model = WeightModel::bernoulli(0.5);
  const auto shape = GridShape::with_rows(2, 2);
  std::vector<double> first, second;
  for (std::uint32_t s = 0; s < 10000; ++s) {
    RandomStream a(StreamKey{7, 0, 0, s}), b(StreamKey{8, 0, 0, s});
    first.push_back(static_cast<double>(build_trajectory(shape, model, a, TrajectoryMode::kIncremental, false).L[2]));
    second.push_back(static_cast<double>(build_trajectory(shape, model, b, TrajectoryMode::kIncremental, false).L[2]));
  }
  CHECK(ks_two_sample(first, second).p_value > 0.001);
}

TEST_CASE("reversed Lipschitz checker") {
  const auto model = WeightModel::bernoulli(0.5);
  const auto shape = GridShape::with_rows(16, 4);  // 64 sites, I = (28, 36)
  std::vector<Weight> linear(65), flat(65, 7);
  for (std::size_t k = 0; k < linear.size(); ++k) linear[k] = static_cast<Weight>(k);

  LipschitzOptions opts;
  opts.c5 = 2.0;  // slope c5 / rows = 0.5
  const auto ok = check_reversed_lipschitz(linear, {}, model, shape, opts);
  CHECK(ok.window.first == 29);
  CHECK(ok.window.last == 35);
  CHECK(ok.on_holds);
  CHECK(ok.violations.empty());
  CHECK(ok.pairs_checked > 0);
  CHECK_FALSE(ok.a_holds.has_value());

  opts.gap = 2.0;
  const auto bad = check_reversed_lipschitz(flat, {}, model, shape, opts);
  CHECK_FALSE(bad.on_holds);
  CHECK(bad.violations.size() >= 1);
  CHECK(bad.violations.size() == bad.pairs_checked);

  SUBCASE("default constants") {
    const auto c = resolve_constants(model, shape);
    CHECK(c.epsilon == doctest::Approx(0.125));
    CHECK(c.c1 == doctest::Approx(0.875));
    CHECK(c.c5 == doctest::Approx(0.125));
    CHECK(c.c_ell == doctest::Approx(0.5));
    CHECK(c.gap == doctest::Approx(4.0));
    CHECK(c.slope == doctest::Approx(0.125 / 4));
    LipschitzOptions too_big;
    too_big.epsilon = 0.3;
    CHECK_THROWS(resolve_constants(model, shape, too_big));
  }
  SUBCASE("empty window") {
    // One site with p = 0.5: I = (0, 1) holds no integer.
    std::vector<Weight> one = {0, 1};
    CHECK_THROWS_AS(check_reversed_lipschitz(one, {}, model, GridShape::with_rows(1, 1)), std::invalid_argument);
  }
}

TEST_CASE("O_n at n = 256, alpha = 1/4 is frequent with default constants") {
  const auto model = WeightModel::bernoulli(0.5);
  const auto shape = GridShape::from_alpha(256, 0.25);
  int holds = 0, a_holds = 0;
  for (std::uint32_t s = 0; s < 30; ++s) {
    RandomStream rng(StreamKey{9, 0, 0, s});
    const auto report = check_reversed_lipschitz(build_trajectory(shape, model, rng));
    holds += report.on_holds;
    a_holds += report.a_holds.value();
  }
  MESSAGE("O_n held in " << holds << "/30, A_n in " << a_holds << "/30");
  CHECK(holds >= 24);
}

TEST_CASE("increment conditional mean against its lower bound") {
  const auto two_point = WeightModel::bernoulli(0.5);
  SUBCASE("all-lo 1x1 grid: equality") {
    RandomStream rng(10);
    const auto t = build_trajectory(GridShape::with_rows(1, 1), two_point, rng);
    const auto check = increment_conditional_mean(t, 0, 100, rng);
    CHECK(check.mc_mean == 1.0);
    CHECK(check.exact_mean == 1.0);
    CHECK(check.bound == 1.0);
    CHECK_THROWS_AS(increment_conditional_mean(t, 1, 100, rng), std::invalid_argument);
  }
  SUBCASE("single row: every lo site is on the geodesic") {
    RandomStream rng(11);
    const auto t = build_trajectory(GridShape::with_rows(9, 1), two_point, rng);
    for (std::size_t k = 0; k < 9; ++k) {
      const auto check = increment_conditional_mean(t, k, 50, rng);
      CHECK(check.mc_mean == 1.0);  // E(w|hi) - E(w|lo) = 1 - 0
      CHECK(check.mc_mean >= check.bound);
    }
  }
  SUBCASE("random 16x4 grids, 1000 checks") {
    const auto model = WeightModel::make({{0, 0.3}, {1, 0.3}, {2, 0.2}, {4, 0.2}}, 1.0);
    int checks = 0;
    for (std::uint32_t s = 0; checks < 1000; ++s) {
      RandomStream rng(StreamKey{12, 0, 0, s});
      const auto t = build_trajectory(GridShape::with_rows(16, 4), model, rng);
      RandomStream draws(StreamKey{12, 0, 1, s});
      for (int c = 0; c < 10; ++c, ++checks) {
        const auto k = static_cast<std::size_t>(draws.below(64));
        const auto check = increment_conditional_mean(t, k, 400, draws);
        REQUIRE(check.exact_mean >= check.bound - 1e-12);
        REQUIRE(check.mc_mean >= check.bound - 3.0 * check.mc_stderr);
      }
    }
  }
}
