#include "dlpp/geodesic.hpp"

#include <algorithm>
#include <stdexcept>

namespace dlpp {

std::vector<std::uint8_t> on_some_geodesic(const WeightGrid& grid, const PassageResult& result) {
  if (!result.has_backward()) throw std::invalid_argument("geodesics need the backward table");
  const GridShape& shape = grid.shape();
  std::vector<std::uint8_t> flags(shape.sites(), 0);
  for (int y = 0; y < shape.rows; ++y) {
    for (int x = 0; x < shape.cols; ++x) {
      if (result.through(grid, x, y) == result.value) flags[shape.index(x, y)] = 1;
    }
  }
  return flags;
}

GeodesicSet geodesics(const WeightGrid& grid, const PassageResult& result, TieBreak tie_break) {
  const GridShape& shape = grid.shape();
  const auto flags = on_some_geodesic(grid, result);
  GeodesicSet set;

  // Backward trace from the sink: the predecessor is any neighbour whose
  // forward value accounts for the rest of the path.
  Vertex v{shape.cols - 1, shape.rows - 1};
  set.canonical.push_back(v);
  while (v.x > 0 || v.y > 0) {
    const Weight need = result.fwd(v.x, v.y) - grid.at(v);
    const bool left_ok = v.x > 0 && result.fwd(v.x - 1, v.y) == need;
    const bool down_ok = v.y > 0 && result.fwd(v.x, v.y - 1) == need;
    if (left_ok && (tie_break == TieBreak::kPreferRight || !down_ok)) {
      --v.x;
    } else if (down_ok) {
      --v.y;
    } else {
      throw std::logic_error("geodesic trace lost the optimal path");
    }
    set.canonical.push_back(v);
  }
  std::reverse(set.canonical.begin(), set.canonical.end());

  const int diagonals = shape.cols + shape.rows - 1;
  set.on_geodesic_per_diagonal.assign(static_cast<std::size_t>(diagonals), 0);
  std::vector<Vertex> last_seen(static_cast<std::size_t>(diagonals));
  for (int y = 0; y < shape.rows; ++y) {
    for (int x = 0; x < shape.cols; ++x) {
      if (!flags[shape.index(x, y)]) continue;
      const auto d = static_cast<std::size_t>(x + y);
      ++set.on_geodesic_per_diagonal[d];
      last_seen[d] = Vertex{x, y};
    }
  }
  for (std::size_t d = 0; d < last_seen.size(); ++d) {
    if (set.on_geodesic_per_diagonal[d] == 1) set.intersection.push_back(last_seen[d]);
  }
  return set;
}

}  // namespace dlpp
