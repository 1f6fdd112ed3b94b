#include "dlpp/coupling.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dlpp/passage.hpp"
#include "dlpp/stats.hpp"

namespace dlpp {

namespace {

Vertex vertex_of(const GridShape& shape, std::size_t index) {
  return Vertex{static_cast<int>(index % static_cast<std::size_t>(shape.cols)),
                static_cast<int>(index / static_cast<std::size_t>(shape.cols))};
}

}  // namespace

WeightGrid CoupledTrajectory::grid_at(std::size_t k) const {
  if (k > sites()) throw std::out_of_range("trajectory: step beyond the last flip");
  std::vector<Weight> weights = lo_values;
  for (std::size_t step = 0; step < k; ++step) weights[flip_order[step]] = hi_values[flip_order[step]];
  return WeightGrid(shape, std::move(weights), model.hi_cutoff());
}

CoupledTrajectory build_trajectory(const GridShape& shape, const WeightModel& model, RandomStream& rng,
                                   TrajectoryMode mode, bool track_hi_max) {
  CoupledTrajectory t{shape, model, {}, {}, {}, {}, {}};
  const std::size_t sites = shape.sites();
  t.flip_order.resize(sites);
  std::iota(t.flip_order.begin(), t.flip_order.end(), 0u);
  for (std::size_t i = sites; i-- > 1;) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(t.flip_order[i], t.flip_order[j]);
  }
  t.lo_values.resize(sites);
  for (auto& w : t.lo_values) w = model.sample_conditional(Mode::kLo, rng);
  t.hi_values.resize(sites);
  for (auto& w : t.hi_values) w = model.sample_conditional(Mode::kHi, rng);

  t.L.resize(sites + 1);
  if (track_hi_max) t.M.resize(sites + 1);

  if (mode == TrajectoryMode::kFullRecompute) {
    for (std::size_t k = 0; k <= sites; ++k) {
      const WeightGrid grid = t.grid_at(k);
      t.L[k] = last_passage_value(grid);
      if (track_hi_max) t.M[k] = hi_mode_max(grid);
    }
    return t;
  }

  WeightGrid grid(shape, t.lo_values, model.hi_cutoff());
  PassageResult passage = last_passage(grid);
  // The hi-mode maximum is itself a last-passage value on 0/1 weights.
  WeightGrid indicator(shape, std::vector<Weight>(sites, 0), 0);
  PassageResult indicator_passage = last_passage(indicator);
  t.L[0] = passage.value;
  if (track_hi_max) t.M[0] = static_cast<int>(indicator_passage.value);
  for (std::size_t k = 0; k < sites; ++k) {
    const std::uint32_t site = t.flip_order[k];
    const Vertex v = vertex_of(shape, site);
    apply_flip(grid, passage, v, t.hi_values[site]);
    t.L[k + 1] = passage.value;
    if (track_hi_max) {
      apply_flip(indicator, indicator_passage, v, 1);
      t.M[k + 1] = static_cast<int>(indicator_passage.value);
    }
  }
  return t;
}

std::pair<std::uint64_t, Weight> evaluate_at_N(const CoupledTrajectory& trajectory, RandomStream& rng) {
  const BinomialSampler binomial(trajectory.sites(), trajectory.model.p());
  const std::uint64_t n = binomial(rng);
  return {n, trajectory.L[n]};
}

LipschitzConstants resolve_constants(const WeightModel& model, const GridShape& shape,
                                     const LipschitzOptions& options) {
  const double p = model.p();
  LipschitzConstants c;
  c.epsilon = options.epsilon.value_or((1.0 - p) / 4.0);
  if (!(c.epsilon > 0.0) || !(c.epsilon < (1.0 - p) / 2.0)) {
    throw std::invalid_argument("lipschitz: epsilon must lie in (0, (1 - p) / 2)");
  }
  c.c1 = options.c1.value_or(c.epsilon + (p + 1.0) / 2.0);
  c.c5 = options.c5.value_or((1.0 - c.c1) * (model.mean_hi() - model.threshold()));
  c.c_ell = options.c_ell.value_or(std::sqrt(p * (1.0 - p)));
  c.gap = options.gap.value_or(c.c_ell * std::sqrt(static_cast<double>(shape.sites())));
  c.slope = c.c5 / static_cast<double>(shape.rows);
  return c;
}

LipschitzReport check_reversed_lipschitz(std::span<const Weight> L, std::span<const int> M, const WeightModel& model,
                                         const GridShape& shape, const LipschitzOptions& options) {
  if (L.size() != shape.sites() + 1) throw std::invalid_argument("lipschitz: trajectory length does not match grid");
  LipschitzReport report;
  report.constants = resolve_constants(model, shape, options);
  report.window = window_for(shape.sites(), model.p());
  const WindowI& w = report.window;
  if (w.empty()) throw std::invalid_argument("lipschitz: window I is empty");

  const auto first = std::max<std::int64_t>(w.first, 0);
  const auto last = std::min<std::int64_t>(w.last, static_cast<std::int64_t>(shape.sites()));
  const double scale = static_cast<double>(model.scale());
  for (std::int64_t i = first; i <= last; ++i) {
    for (std::int64_t j = i + 1; j <= last; ++j) {
      if (static_cast<double>(j - i) < report.constants.gap) continue;
      ++report.pairs_checked;
      const double rise = static_cast<double>(L[static_cast<std::size_t>(j)] - L[static_cast<std::size_t>(i)]) / scale;
      if (rise < report.constants.slope * static_cast<double>(j - i)) report.violations.emplace_back(i, j);
    }
  }
  report.on_holds = report.violations.empty();

  if (!M.empty()) {
    bool all = true;
    const double limit = report.constants.c1 * static_cast<double>(shape.cols);
    for (std::int64_t k = first; k <= last; ++k) {
      if (!(static_cast<double>(M[static_cast<std::size_t>(k)]) < limit)) all = false;
    }
    report.a_holds = all;
  }
  return report;
}

LipschitzReport check_reversed_lipschitz(const CoupledTrajectory& trajectory, const LipschitzOptions& options) {
  return check_reversed_lipschitz(trajectory.L, trajectory.M, trajectory.model, trajectory.shape, options);
}

IncrementCheck increment_conditional_mean(const CoupledTrajectory& trajectory, std::size_t k, int draws,
                                          RandomStream& rng) {
  const std::size_t sites = trajectory.sites();
  if (k >= sites) throw std::invalid_argument("increment check: no lo-mode site remains");
  if (draws < 2) throw std::invalid_argument("increment check: need at least two draws");
  const WeightModel& model = trajectory.model;
  const GridShape& shape = trajectory.shape;
  const WeightGrid grid = trajectory.grid_at(k);
  const PassageResult passage = last_passage(grid);

  IncrementCheck check;
  check.k = k;
  check.hi_max = hi_mode_max(grid);
  check.lo_sites = sites - k;
  check.bound = static_cast<double>(shape.path_length() - check.hi_max) / static_cast<double>(check.lo_sites) *
                (model.mean_hi() - model.threshold());

  // Raising w(v) from a to b moves L to max(L, through(v) - a + b).
  auto increment = [&](std::uint32_t site, Weight new_value) {
    const Vertex v = vertex_of(shape, site);
    const Weight through = passage.through(grid, v.x, v.y) - grid.at(v) + new_value;
    return through > passage.value ? through - passage.value : Weight{0};
  };

  // Sites flip_order[k..] are exactly the lo-mode sites of W^k.
  const auto law = model.conditional_law(Mode::kHi);
  double exact = 0.0;
  for (std::size_t step = k; step < sites; ++step) {
    for (const auto& [value, prob] : law) exact += prob * static_cast<double>(increment(trajectory.flip_order[step], value));
  }
  check.exact_mean = model.to_real(exact / static_cast<double>(check.lo_sites));

  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(draws));
  for (int d = 0; d < draws; ++d) {
    const std::uint32_t site = trajectory.flip_order[k + static_cast<std::size_t>(rng.below(check.lo_sites))];
    const Weight value = model.sample_conditional(Mode::kHi, rng);
    samples.push_back(model.to_real(increment(site, value)));
  }
  check.mc_mean = mean(samples);
  check.mc_stderr = std::sqrt(sample_variance(samples) / static_cast<double>(draws));
  return check;
}

}  // namespace dlpp
