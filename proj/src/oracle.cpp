#include "dlpp/oracle.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace dlpp {

std::uint64_t directed_path_count(const GridShape& shape) {
  const std::uint64_t steps = static_cast<std::uint64_t>(shape.cols + shape.rows - 2);
  const std::uint64_t ups = static_cast<std::uint64_t>(std::min(shape.rows, shape.cols) - 1);
  unsigned __int128 count = 1;
  for (std::uint64_t k = 1; k <= ups; ++k) {
    count = count * (steps - ups + k) / k;
    if (count > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(count);
}

namespace {

class Walker {
 public:
  explicit Walker(const WeightGrid& grid) : grid_(grid), on_path_count_(grid.shape().sites(), 0) {
    path_.reserve(static_cast<std::size_t>(grid.shape().path_length()));
  }

  // Pass 1 finds the maximum; pass 2 counts how often each vertex sits on a
  // maximizing path.
  void walk(int x, int y, Weight sum, bool second_pass) {
    sum += grid_.at(x, y);
    path_.push_back(Vertex{x, y});
    const int last_x = grid_.cols() - 1, last_y = grid_.rows() - 1;
    if (x == last_x && y == last_y) {
      if (!second_pass) {
        ++visited_;
        if (visited_ == 1 || sum > best_) best_ = sum;
      } else if (sum == best_) {
        ++geodesics_;
        for (const auto& v : path_) ++on_path_count_[grid_.shape().index(v.x, v.y)];
      }
    } else {
      if (x < last_x) walk(x + 1, y, sum, second_pass);
      if (y < last_y) walk(x, y + 1, sum, second_pass);
    }
    path_.pop_back();
  }

  PathEnumeration finish() const {
    PathEnumeration out;
    out.best = best_;
    out.paths_visited = visited_;
    out.geodesic_count = geodesics_;
    const GridShape& shape = grid_.shape();
    for (int d = 0; d < shape.cols + shape.rows - 1; ++d) {
      for (int y = 0; y < shape.rows; ++y) {
        const int x = d - y;
        if (x < 0 || x >= shape.cols) continue;
        if (on_path_count_[shape.index(x, y)] == geodesics_) out.intersection.push_back(Vertex{x, y});
      }
    }
    return out;
  }

 private:
  const WeightGrid& grid_;
  std::vector<Vertex> path_;
  std::vector<std::uint64_t> on_path_count_;
  Weight best_ = 0;
  std::uint64_t visited_ = 0;
  std::uint64_t geodesics_ = 0;
};

}  // namespace

PathEnumeration enumerate_paths(const WeightGrid& grid, std::uint64_t cap) {
  const std::uint64_t count = directed_path_count(grid.shape());
  if (count > cap) {
    throw std::length_error("path enumeration: " + std::to_string(count) + " paths exceed cap " +
                            std::to_string(cap));
  }
  Walker walker(grid);
  walker.walk(0, 0, 0, false);
  walker.walk(0, 0, 0, true);
  return walker.finish();
}

Weight enumerate_paths_lpp(const WeightGrid& grid, std::uint64_t cap) {
  return enumerate_paths(grid, cap).best;
}

}  // namespace dlpp
