#include "dlpp/window.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "dlpp/estimation.hpp"
#include "dlpp/stats.hpp"

namespace dlpp {

WindowI window_for(std::uint64_t sites, double p) {
  if (!(p > 0.0) || !(p < 1.0)) throw std::invalid_argument("window: p must lie in (0, 1)");
  WindowI w;
  const auto n = static_cast<double>(sites);
  w.center = n * p;
  w.half_width = std::sqrt(p * (1.0 - p) * n);
  w.first = static_cast<std::int64_t>(std::floor(w.center - w.half_width)) + 1;
  w.last = static_cast<std::int64_t>(std::ceil(w.center + w.half_width)) - 1;
  return w;
}

WindowI window_I(const GridShape& shape, double p) {
  const auto sites = static_cast<double>(shape.sites());
  if (sites * p * (1.0 - p) < 1.0) throw std::invalid_argument("window: rows*n*p(1-p) must be at least 1");
  WindowI w = window_for(shape.sites(), p);
  if (w.empty()) throw std::invalid_argument("window: empty window");
  return w;
}

WindowStats window_stats(std::span<const std::int64_t> samples, const WindowI& window, double r) {
  if (window.empty()) throw std::invalid_argument("window: empty window");
  std::vector<double> inside;
  for (auto k : samples) {
    if (window.contains(k)) inside.push_back(static_cast<double>(k));
  }
  if (inside.empty()) throw std::invalid_argument("window: no sample falls inside the window");
  WindowStats stats;
  stats.inside_count = inside.size();
  stats.p_inside = static_cast<double>(inside.size()) / static_cast<double>(samples.size());
  stats.conditional_mean = mean(inside);
  stats.mean_offset = std::abs(stats.conditional_mean - window.center);
  stats.conditional_moment = inside.size() >= 2 ? central_moment_value(inside, r) : 0.0;
  return stats;
}

double gaussian_window_mass() { return normal_cdf(1.0) - normal_cdf(-1.0); }

double window_offset_bound() { return 3.0 / gaussian_window_mass(); }

}  // namespace dlpp
