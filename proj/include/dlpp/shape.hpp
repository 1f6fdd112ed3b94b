#pragma once

#include <cstdint>

#include "dlpp/weight_model.hpp"

namespace dlpp {

/// Small-aspect approximation of the hi-count shape function,
/// g((1, a)) ~ p + 2 sqrt(p (1 - p) a). Requires 0 < a <= 1.
double shape_function_estimate(double p, double a);

struct ShapeEstimate {
  int n = 0;
  int rows = 0;
  double a = 0.0;
  double g_hat = 0.0;   // mean(M) / n
  double stderr = 0.0;  // of g_hat
};

/// Monte Carlo mean of M(n, floor(n a)) / n over `reps` grids; replicate k uses
/// StreamKey{seed, kShapeCurve, 0, k}. Throws when floor(n a) < 1.
ShapeEstimate empirical_shape(int n, double a, const WeightModel& model, int reps, std::uint64_t seed);

}  // namespace dlpp
