#pragma once

// Brute-force references for the lattice dynamic programs. They walk every
// directed path explicitly and share no code with passage.cpp/geodesic.cpp.

#include <cstdint>
#include <vector>

#include "dlpp/grid.hpp"

namespace dlpp {

inline constexpr std::uint64_t kDefaultPathCap = 1'000'000;

/// C(cols + rows - 2, rows - 1), saturating at UINT64_MAX.
std::uint64_t directed_path_count(const GridShape& shape);

struct PathEnumeration {
  Weight best = 0;
  std::uint64_t paths_visited = 0;
  std::uint64_t geodesic_count = 0;
  /// Vertices on every maximizing path, ordered by anti-diagonal.
  std::vector<Vertex> intersection;
};

/// Throws std::length_error when the grid has more than `cap` paths.
PathEnumeration enumerate_paths(const WeightGrid& grid, std::uint64_t cap = kDefaultPathCap);

/// Maximum path sum by exhaustive enumeration.
Weight enumerate_paths_lpp(const WeightGrid& grid, std::uint64_t cap = kDefaultPathCap);

}  // namespace dlpp
