#include "dlpp/passage.hpp"

#include <algorithm>
#include <cassert>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace dlpp {

namespace {

constexpr Weight kUnreachable = std::numeric_limits<Weight>::min() / 4;

template <typename Value, typename WeightAt>
void forward_pass(const GridShape& shape, WeightAt&& weight_at, std::vector<Value>& table) {
  table.assign(shape.sites(), Value{});
  for (int y = 0; y < shape.rows; ++y) {
    for (int x = 0; x < shape.cols; ++x) {
      Value best;
      if (x == 0 && y == 0) {
        best = 0;
      } else if (x == 0) {
        best = table[shape.index(x, y - 1)];
      } else if (y == 0) {
        best = table[shape.index(x - 1, y)];
      } else {
        best = std::max(table[shape.index(x - 1, y)], table[shape.index(x, y - 1)]);
      }
      table[shape.index(x, y)] = best + weight_at(x, y);
    }
  }
}

}  // namespace

PassageResult last_passage(const WeightGrid& grid) {
  const GridShape& shape = grid.shape();
  PassageResult result;
  result.shape = shape;
  forward_pass(shape, [&](int x, int y) { return grid.at(x, y); }, result.forward);

  result.backward.assign(shape.sites(), 0);
  const int last_x = shape.cols - 1, last_y = shape.rows - 1;
  for (int y = last_y; y >= 0; --y) {
    for (int x = last_x; x >= 0; --x) {
      Weight best = 0;
      if (x == last_x && y == last_y) {
        best = 0;
      } else if (x == last_x) {
        best = result.backward[shape.index(x, y + 1)];
      } else if (y == last_y) {
        best = result.backward[shape.index(x + 1, y)];
      } else {
        best = std::max(result.backward[shape.index(x + 1, y)], result.backward[shape.index(x, y + 1)]);
      }
      result.backward[shape.index(x, y)] = best + grid.at(x, y);
    }
  }
  result.value = result.forward.back();
  assert(result.value == result.backward.front());
  return result;
}

Weight last_passage_value(const WeightGrid& grid) {
  // Single rolling row; this is the hot path of the moment experiments.
  const int cols = grid.cols();
  std::vector<Weight> row(static_cast<std::size_t>(cols));
  for (int y = 0; y < grid.rows(); ++y) {
    Weight left = 0;
    for (int x = 0; x < cols; ++x) {
      Weight best;
      if (y == 0) {
        best = x == 0 ? 0 : left;
      } else {
        best = x == 0 ? row[0] : std::max(left, row[static_cast<std::size_t>(x)]);
      }
      left = best + grid.at(x, y);
      row[static_cast<std::size_t>(x)] = left;
    }
  }
  return row.back();
}

int hi_mode_max(const WeightGrid& grid) {
  std::vector<int> table;
  forward_pass(grid.shape(), [&](int x, int y) { return grid.hi(x, y) ? 1 : 0; }, table);
  return table.back();
}

bool in_cylinder(const GridShape& shape, int x, int y, int width) {
  if (shape.cols == 1) return true;
  const std::int64_t span = shape.cols - 1;
  const std::int64_t offset = static_cast<std::int64_t>(y) * span - static_cast<std::int64_t>(x) * (shape.rows - 1);
  return std::llabs(offset) <= static_cast<std::int64_t>(width) * span;
}

Weight cylinder_last_passage(const WeightGrid& grid, int width) {
  if (width < 1) throw std::invalid_argument("cylinder width must be at least 1");
  const GridShape& shape = grid.shape();
  std::vector<Weight> table(shape.sites(), kUnreachable);
  for (int y = 0; y < shape.rows; ++y) {
    for (int x = 0; x < shape.cols; ++x) {
      if (!in_cylinder(shape, x, y, width)) continue;
      Weight best = kUnreachable;
      if (x == 0 && y == 0) best = 0;
      if (x > 0) best = std::max(best, table[shape.index(x - 1, y)]);
      if (y > 0) best = std::max(best, table[shape.index(x, y - 1)]);
      if (best == kUnreachable) continue;
      table[shape.index(x, y)] = best + grid.at(x, y);
    }
  }
  // The staircase closest to the segment always stays within distance < 1.
  if (table.back() == kUnreachable) throw std::logic_error("cylinder admits no directed path");
  return table.back();
}

std::size_t apply_flip(WeightGrid& grid, PassageResult& result, Vertex v, Weight new_value) {
  const GridShape& shape = grid.shape();
  if (!(shape == result.shape)) throw std::invalid_argument("apply_flip: result does not belong to grid");
  const std::size_t source = shape.index(v.x, v.y);
  const Weight old_value = grid.weights()[source];
  if (new_value < old_value) throw std::invalid_argument("apply_flip: weights may only increase");
  grid.set(source, new_value);
  result.backward.clear();
  if (new_value == old_value) return 0;

  auto& fwd = result.forward;
  const int cols = shape.cols;
  std::vector<std::uint8_t> prev(static_cast<std::size_t>(cols), 0), cur(static_cast<std::size_t>(cols), 0);
  int prev_lo = v.x, prev_hi = v.x;
  std::size_t changed_total = 0;

  for (int y = v.y; y < shape.rows; ++y) {
    const int start = y == v.y ? v.x : prev_lo;
    int lo = cols, hi = -1;
    for (int x = start; x < cols; ++x) {
      const bool is_source = y == v.y && x == v.x;
      const bool below_changed = y > v.y && x >= prev_lo && x <= prev_hi && prev[static_cast<std::size_t>(x)];
      const bool left_changed = x > start && cur[static_cast<std::size_t>(x - 1)];
      if (!is_source && !below_changed && !left_changed) {
        if (y == v.y || x > prev_hi) break;
        continue;
      }
      Weight best = 0;
      if (x > 0 && y > 0) {
        best = std::max(fwd[shape.index(x - 1, y)], fwd[shape.index(x, y - 1)]);
      } else if (x > 0) {
        best = fwd[shape.index(x - 1, y)];
      } else if (y > 0) {
        best = fwd[shape.index(x, y - 1)];
      }
      const Weight updated = best + grid.at(x, y);
      Weight& slot = fwd[shape.index(x, y)];
      assert(updated >= slot);
      if (updated != slot) {
        slot = updated;
        cur[static_cast<std::size_t>(x)] = 1;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        ++changed_total;
      }
    }
    if (hi < 0) break;
    std::fill(prev.begin() + prev_lo, prev.begin() + prev_hi + 1, std::uint8_t{0});
    std::swap(prev, cur);
    prev_lo = lo;
    prev_hi = hi;
  }
  result.value = fwd.back();
  return changed_total;
}

}  // namespace dlpp
