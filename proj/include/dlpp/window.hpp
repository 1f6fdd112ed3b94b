#pragma once

#include <cstdint>
#include <span>

#include "dlpp/grid.hpp"

namespace dlpp {

/// One-standard-deviation window around the mean of N ~ Binomial(sites, p).
/// Membership is open: k is inside iff centre - half_width < k < centre + half_width.
struct WindowI {
  double center = 0.0;
  double half_width = 0.0;
  std::int64_t first = 0;  // smallest integer inside
  std::int64_t last = -1;  // largest integer inside

  bool empty() const { return last < first; }
  bool contains(std::int64_t k) const { return k >= first && k <= last; }
  std::int64_t size() const { return empty() ? 0 : last - first + 1; }
};

WindowI window_for(std::uint64_t sites, double p);
/// Throws std::invalid_argument when rows*n*p(1-p) < 1 or the window is empty.
WindowI window_I(const GridShape& shape, double p);

struct WindowStats {
  double p_inside = 0.0;          // fraction of samples in I
  double conditional_mean = 0.0;  // E(N | N in I)
  double mean_offset = 0.0;       // |E(N | N in I) - centre|
  double conditional_moment = 0.0;
  std::size_t inside_count = 0;
};

/// Throws when no sample falls inside the window.
WindowStats window_stats(std::span<const std::int64_t> samples, const WindowI& window, double r = 2.0);

/// Gaussian mass of [-1, 1], the limit of P(N in I).
double gaussian_window_mass();

/// 3 / P(|Z| <= 1), the large-grid bound on |E(N | N in I) - centre|.
double window_offset_bound();

}  // namespace dlpp
