#include "dlpp/shape.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dlpp/grid.hpp"
#include "dlpp/passage.hpp"
#include "dlpp/stats.hpp"

namespace dlpp {

double shape_function_estimate(double p, double a) {
  if (!(a > 0.0) || a > 1.0) throw std::invalid_argument("shape function: a must lie in (0, 1]");
  if (!(p > 0.0) || !(p < 1.0)) throw std::invalid_argument("shape function: p must lie in (0, 1)");
  return p + 2.0 * std::sqrt(p * (1.0 - p) * a);
}

ShapeEstimate empirical_shape(int n, double a, const WeightModel& model, int reps, std::uint64_t seed) {
  if (!(a > 0.0) || a > 1.0) throw std::invalid_argument("empirical shape: a must lie in (0, 1]");
  if (reps < 2) throw std::invalid_argument("empirical shape: need at least two replicates");
  const int rows = static_cast<int>(std::floor(static_cast<double>(n) * a + 1e-9));
  if (rows < 1) throw std::invalid_argument("empirical shape: floor(n a) < 1");
  const GridShape shape = GridShape::with_rows(n, rows);

  std::vector<double> ratios;
  ratios.reserve(static_cast<std::size_t>(reps));
  for (int k = 0; k < reps; ++k) {
    RandomStream rng(StreamKey{seed, purpose::kShapeCurve, 0, static_cast<std::uint32_t>(k)});
    const WeightGrid grid = sample_grid(shape, model, rng);
    ratios.push_back(static_cast<double>(hi_mode_max(grid)) / static_cast<double>(n));
  }
  ShapeEstimate est;
  est.n = n;
  est.rows = rows;
  est.a = a;
  est.g_hat = mean(ratios);
  est.stderr = std::sqrt(sample_variance(ratios) / static_cast<double>(reps));
  return est;
}

}  // namespace dlpp
