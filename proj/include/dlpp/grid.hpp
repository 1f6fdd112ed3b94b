#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dlpp/weight_model.hpp"

namespace dlpp {

/// floor(n^alpha), nudged by 1e-9 before flooring so exact powers such as
/// 16^0.75 = 8 do not come out as 7.
int rows_for(int n, double alpha);

/// An n x rows lattice. Columns run along e1 (x), rows along e2 (y).
struct GridShape {
  int cols = 1;
  int rows = 1;
  double alpha = 0.0;  // 0 when the shape was given explicitly

  static GridShape from_alpha(int n, double alpha);
  static GridShape with_rows(int cols, int rows);

  std::size_t sites() const { return static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows); }
  /// Number of vertices on every directed corner-to-corner path.
  int path_length() const { return cols + rows - 1; }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(x);
  }
  bool operator==(const GridShape&) const = default;
};

/// 0-based lattice coordinates; (0, 0) is the source, (cols-1, rows-1) the sink.
struct Vertex {
  int x = 0;
  int y = 0;
  bool operator==(const Vertex&) const = default;
  auto operator<=>(const Vertex&) const = default;
};

/// Realized weights in raster order (row-major, bottom row first), plus the
/// derived hi-mode flags.
class WeightGrid {
 public:
  WeightGrid(GridShape shape, std::vector<Weight> weights, Weight hi_cutoff);

  const GridShape& shape() const { return shape_; }
  int cols() const { return shape_.cols; }
  int rows() const { return shape_.rows; }
  Weight hi_cutoff() const { return hi_cutoff_; }

  Weight at(int x, int y) const { return weights_[shape_.index(x, y)]; }
  Weight at(Vertex v) const { return at(v.x, v.y); }
  bool hi(int x, int y) const { return hi_[shape_.index(x, y)] != 0; }
  const std::vector<Weight>& weights() const { return weights_; }
  const std::vector<std::uint8_t>& hi_flags() const { return hi_; }
  std::size_t hi_count() const;

  void set(std::size_t index, Weight value);

 private:
  GridShape shape_;
  std::vector<Weight> weights_;
  std::vector<std::uint8_t> hi_;
  Weight hi_cutoff_ = 0;
};

/// rows*cols i.i.d. draws from the model, consumed in raster order.
WeightGrid sample_grid(const GridShape& shape, const WeightModel& model, RandomStream& rng);

/// Debug dump: one line per row, row 1 (y = 0) first, space-separated scaled
/// integer weights.
void dump_grid(std::ostream& out, const WeightGrid& grid);

}  // namespace dlpp
