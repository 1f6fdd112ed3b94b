#pragma once

#include <cstdint>
#include <vector>

#include "dlpp/grid.hpp"

namespace dlpp {

/// Last-passage value with its forward and backward dynamic-programming tables.
///
/// forward[v]  = best weight of a directed path source -> v (both ends counted)
/// backward[v] = best weight of a directed path v -> sink (both ends counted)
///
/// After apply_flip() only `forward` and `value` are kept current; `backward`
/// is cleared and has_backward() turns false.
struct PassageResult {
  GridShape shape;
  Weight value = 0;
  std::vector<Weight> forward;
  std::vector<Weight> backward;

  bool has_backward() const { return !backward.empty(); }
  Weight fwd(int x, int y) const { return forward[shape.index(x, y)]; }
  Weight bwd(int x, int y) const { return backward[shape.index(x, y)]; }
  /// Best weight of a directed path forced through v. Needs the backward table.
  Weight through(const WeightGrid& grid, int x, int y) const {
    return fwd(x, y) + bwd(x, y) - grid.at(x, y);
  }
};

PassageResult last_passage(const WeightGrid& grid);

/// Last-passage value only, without keeping the tables.
Weight last_passage_value(const WeightGrid& grid);

/// M_n: the last-passage value of the hi-mode indicator grid.
int hi_mode_max(const WeightGrid& grid);

/// Last passage restricted to vertices whose vertical distance to the straight
/// segment from the source to the sink is at most `width`. In 0-based
/// coordinates that is |y (n-1) - x (rows-1)| <= width (n-1); every vertex is
/// admissible when n = 1.
Weight cylinder_last_passage(const WeightGrid& grid, int width);
bool in_cylinder(const GridShape& shape, int x, int y, int width);

/// Raises the weight at `v` to `new_value` and repairs result.forward by
/// propagating through the up-right cone of `v`, stopping wherever entries do
/// not change. Throws std::invalid_argument on a decreasing update.
/// Returns the number of forward entries that changed.
std::size_t apply_flip(WeightGrid& grid, PassageResult& result, Vertex v, Weight new_value);

}  // namespace dlpp
