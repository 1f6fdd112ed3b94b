#pragma once

// The lo -> hi flipping construction W^0, ..., W^{rows*n}.
//
// W^0 carries a lo-mode value on every site; W^{k+1} replaces the value at
// the (k+1)-th site of a uniform random order by a hi-mode value. W^k
// therefore has exactly k hi-mode sites and, for every k, is distributed as
// the i.i.d. grid conditioned on N = k hi sites.

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dlpp/grid.hpp"
#include "dlpp/window.hpp"

namespace dlpp {

enum class TrajectoryMode { kFullRecompute, kIncremental };

struct CoupledTrajectory {
  GridShape shape;
  WeightModel model;
  /// flip_order[k] is the raster index of the site flipped at step k+1.
  std::vector<std::uint32_t> flip_order;
  std::vector<Weight> lo_values;  // raster order, law F | lo
  std::vector<Weight> hi_values;  // raster order, law F | hi
  /// L[k] = last passage value of W^k, k = 0..sites (scaled units).
  std::vector<Weight> L;
  /// M[k] = hi-mode maximum of W^k; empty unless requested.
  std::vector<int> M;

  std::size_t sites() const { return shape.sites(); }
  /// Materializes W^k.
  WeightGrid grid_at(std::size_t k) const;
};

/// Consumes the stream as: Fisher-Yates shuffle of the site indices, then one
/// lo draw per site in raster order, then one hi draw per site in raster
/// order. Both modes consume identical draws and must agree exactly.
CoupledTrajectory build_trajectory(const GridShape& shape, const WeightModel& model, RandomStream& rng,
                                   TrajectoryMode mode = TrajectoryMode::kIncremental, bool track_hi_max = true);

/// Draws N ~ Binomial(sites, p) from `rng` and returns (N, L[N]). `rng` must
/// be independent of the stream that built the trajectory.
std::pair<std::uint64_t, Weight> evaluate_at_N(const CoupledTrajectory& trajectory, RandomStream& rng);

struct LipschitzOptions {
  std::optional<double> epsilon;  // default (1 - p) / 4
  std::optional<double> c1;       // default epsilon + (p + 1) / 2
  std::optional<double> c5;       // default (1 - c1)(E(w|hi) - m)
  std::optional<double> c_ell;    // default sqrt(p (1 - p))
  std::optional<double> gap;      // default c_ell * sqrt(rows * n)
};

struct LipschitzConstants {
  double epsilon = 0.0;
  double c1 = 0.0;
  double c5 = 0.0;
  double c_ell = 0.0;
  double gap = 0.0;
  /// Required growth rate per flip, c5 / rows, in real weight units.
  double slope = 0.0;
};

LipschitzConstants resolve_constants(const WeightModel& model, const GridShape& shape,
                                     const LipschitzOptions& options = {});

struct LipschitzReport {
  LipschitzConstants constants;
  WindowI window;
  std::size_t pairs_checked = 0;
  std::vector<std::pair<std::int64_t, std::int64_t>> violations;
  bool on_holds = false;  // the event O_n
  /// Whether M(k) < c1 n for every k in I; empty when M was not tracked.
  std::optional<bool> a_holds;
};

/// Checks L(j) - L(i) >= (c5 / rows)(j - i) over all i < j in I with
/// j - i >= gap. Throws std::invalid_argument when I is empty.
LipschitzReport check_reversed_lipschitz(const CoupledTrajectory& trajectory, const LipschitzOptions& options = {});
LipschitzReport check_reversed_lipschitz(std::span<const Weight> L, std::span<const int> M, const WeightModel& model,
                                         const GridShape& shape, const LipschitzOptions& options = {});

struct IncrementCheck {
  std::size_t k = 0;
  int hi_max = 0;               // M(k)
  std::size_t lo_sites = 0;     // rows*n - k
  double bound = 0.0;           // (n + rows - 1 - M(k)) / (rows*n - k) * (E(w|hi) - m)
  double mc_mean = 0.0;         // Monte Carlo E(L(k+1) - L(k) | W^k)
  double mc_stderr = 0.0;
  double exact_mean = 0.0;      // same expectation, summed over all lo sites and hi atoms
};

/// Holds W^k fixed and averages the one-step increment over `draws` uniform
/// choices of the flipped lo site and of its hi value. Real weight units.
/// Throws std::invalid_argument when k = rows*n.
IncrementCheck increment_conditional_mean(const CoupledTrajectory& trajectory, std::size_t k, int draws,
                                          RandomStream& rng);

}  // namespace dlpp
