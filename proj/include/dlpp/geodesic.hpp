#pragma once

#include <vector>

#include "dlpp/passage.hpp"

namespace dlpp {

enum class TieBreak {
  kPreferRight,  // on ties, the traced path arrived by an e1 step
  kPreferUp,
};

struct GeodesicSet {
  /// Source-to-sink vertex list of the canonical geodesic.
  std::vector<Vertex> canonical;
  /// Vertices shared by every geodesic, ordered by anti-diagonal.
  std::vector<Vertex> intersection;
  /// For each anti-diagonal d = x + y, how many vertices lie on some geodesic.
  std::vector<int> on_geodesic_per_diagonal;
};

/// v lies on some geodesic iff forward + backward - w == L. Every directed
/// path crosses each anti-diagonal exactly once, so v is on all geodesics iff
/// it is the only such vertex on its anti-diagonal.
GeodesicSet geodesics(const WeightGrid& grid, const PassageResult& result,
                      TieBreak tie_break = TieBreak::kPreferRight);

/// Flags of vertices lying on at least one geodesic, in raster order.
std::vector<std::uint8_t> on_some_geodesic(const WeightGrid& grid, const PassageResult& result);

}  // namespace dlpp
