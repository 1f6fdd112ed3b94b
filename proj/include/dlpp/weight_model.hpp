#pragma once

// Finite-support weight laws with a hi/lo mode split.
//
// Atom values are scaled to integers at construction (smallest power of ten
// that makes every value integral to 1e-9), and every downstream computation
// runs on those integers. Path sums then compare exactly, which geodesic
// identification relies on.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dlpp/rng.hpp"

namespace dlpp {

using Weight = std::int64_t;

enum class Mode { kLo, kHi };

struct Atom {
  double value = 0.0;
  double probability = 0.0;
};

class WeightModel {
 public:
  /// Validates and normalizes. Throws std::invalid_argument on a degenerate
  /// law, p in {0, 1}, negative values or probabilities not summing to 1.
  static WeightModel make(std::vector<Atom> atoms, double threshold_m);

  /// Two-point law on {0, 1} with P(1) = p and threshold 0.
  static WeightModel bernoulli(double p);

  const std::vector<Atom>& atoms() const { return atoms_; }
  double threshold() const { return threshold_; }
  double p() const { return p_; }
  double max_value() const { return atoms_.back().value; }
  double mean() const { return mean_; }
  double mean_hi() const { return mean_hi_; }
  double mean_lo() const { return mean_lo_; }

  /// Integer scale factor: real value = scaled value / scale().
  std::int64_t scale() const { return scale_; }
  Weight scaled_value(std::size_t atom) const { return scaled_[atom]; }
  Weight scaled_max() const { return scaled_.back(); }
  /// w is hi iff w > hi_cutoff(); exact on scaled integers.
  Weight hi_cutoff() const { return hi_cutoff_; }
  bool is_hi(Weight w) const { return w > hi_cutoff_; }
  double to_real(Weight w) const { return static_cast<double>(w) / static_cast<double>(scale_); }
  double to_real(double scaled_sum) const { return scaled_sum / static_cast<double>(scale_); }

  Weight sample(RandomStream& rng) const;
  Weight sample_conditional(Mode mode, RandomStream& rng) const;

  /// Conditional law of the given mode as (scaled value, probability) pairs.
  std::vector<std::pair<Weight, double>> conditional_law(Mode mode) const;

  std::string describe() const;

 private:
  WeightModel() = default;
  static Weight draw(std::span<const double> cumulative, std::span<const Weight> values, RandomStream& rng);

  std::vector<Atom> atoms_;  // sorted by value, merged
  std::vector<Weight> scaled_;
  double threshold_ = 0.0;
  double p_ = 0.0;
  double mean_ = 0.0;
  double mean_hi_ = 0.0;
  double mean_lo_ = 0.0;
  std::int64_t scale_ = 1;
  Weight hi_cutoff_ = 0;

  std::vector<double> cumulative_;
  std::vector<double> cumulative_hi_;
  std::vector<Weight> values_hi_;
  std::vector<double> cumulative_lo_;
  std::vector<Weight> values_lo_;
};

}  // namespace dlpp
