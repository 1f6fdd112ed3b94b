#include "dlpp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace dlpp {

int rows_for(int n, double alpha) {
  if (n < 1) throw std::invalid_argument("grid: n must be positive");
  if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("grid: alpha must lie in (0, 1]");
  const double power = std::pow(static_cast<double>(n), alpha);
  return static_cast<int>(std::floor(power + 1e-9));
}

GridShape GridShape::from_alpha(int n, double alpha) {
  GridShape shape = with_rows(n, rows_for(n, alpha));
  shape.alpha = alpha;
  return shape;
}

GridShape GridShape::with_rows(int cols, int rows) {
  if (cols < 1 || rows < 1) throw std::invalid_argument("grid: need at least one row and one column");
  if (rows > cols) throw std::invalid_argument("grid: rows must not exceed columns");
  return GridShape{cols, rows, 0.0};
}

WeightGrid::WeightGrid(GridShape shape, std::vector<Weight> weights, Weight hi_cutoff)
    : shape_(shape), weights_(std::move(weights)), hi_(weights_.size()), hi_cutoff_(hi_cutoff) {
  if (weights_.size() != shape_.sites()) throw std::invalid_argument("grid: weight count does not match shape");
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (weights_[k] < 0) throw std::invalid_argument("grid: negative weight");
    hi_[k] = weights_[k] > hi_cutoff_ ? 1 : 0;
  }
}

std::size_t WeightGrid::hi_count() const {
  return static_cast<std::size_t>(std::count(hi_.begin(), hi_.end(), std::uint8_t{1}));
}

void WeightGrid::set(std::size_t index, Weight value) {
  if (value < 0) throw std::invalid_argument("grid: negative weight");
  weights_.at(index) = value;
  hi_[index] = value > hi_cutoff_ ? 1 : 0;
}

WeightGrid sample_grid(const GridShape& shape, const WeightModel& model, RandomStream& rng) {
  std::vector<Weight> weights(shape.sites());
  for (auto& w : weights) w = model.sample(rng);
  return WeightGrid(shape, std::move(weights), model.hi_cutoff());
}

void dump_grid(std::ostream& out, const WeightGrid& grid) {
  for (int y = 0; y < grid.rows(); ++y) {
    for (int x = 0; x < grid.cols(); ++x) {
      if (x) out << ' ';
      out << grid.at(x, y);
    }
    out << '\n';
  }
}

}  // namespace dlpp
