#include "dlpp/weight_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dlpp {

namespace {

constexpr double kProbabilityTolerance = 1e-12;
constexpr double kIntegralTolerance = 1e-9;
constexpr int kMaxDecimalDigits = 9;
// Keeps scaled path sums far from int64 overflow for any grid we simulate.
constexpr double kMaxScaledValue = 1e12;

bool integral_at(double value, double scale) {
  const double scaled = value * scale;
  return std::abs(scaled - std::round(scaled)) <= kIntegralTolerance * std::max(1.0, std::abs(scaled));
}

Weight snap_floor(double x) {
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= kIntegralTolerance * std::max(1.0, std::abs(x))) {
    return static_cast<Weight>(nearest);
  }
  return static_cast<Weight>(std::floor(x));
}

}  // namespace

WeightModel WeightModel::make(std::vector<Atom> atoms, double threshold_m) {
  if (atoms.empty()) throw std::invalid_argument("weight model: no atoms");
  if (!std::isfinite(threshold_m) || threshold_m < 0.0) {
    throw std::invalid_argument("weight model: threshold m must be finite and non-negative");
  }
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!std::isfinite(a.value) || a.value < 0.0) {
      throw std::invalid_argument("weight model: atom values must be finite and non-negative");
    }
    if (!(a.probability > 0.0) || a.probability > 1.0) {
      throw std::invalid_argument("weight model: atom probabilities must lie in (0, 1]");
    }
    total += a.probability;
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "weight model: probabilities sum to " << total << ", not 1";
    throw std::invalid_argument(msg.str());
  }

  std::int64_t scale = 1;
  for (int digits = 0;; ++digits) {
    const bool ok = std::all_of(atoms.begin(), atoms.end(),
                                [&](const Atom& a) { return integral_at(a.value, static_cast<double>(scale)); });
    if (ok) break;
    if (digits == kMaxDecimalDigits) {
      throw std::invalid_argument("weight model: atom values need more than 9 decimal digits");
    }
    scale *= 10;
  }

  // Merge atoms that coincide after scaling; std::map keeps them sorted.
  std::map<Weight, double> merged;
  for (const auto& a : atoms) {
    const double scaled = a.value * static_cast<double>(scale);
    if (scaled > kMaxScaledValue) throw std::invalid_argument("weight model: atom value too large");
    merged[static_cast<Weight>(std::llround(scaled))] += a.probability / total;
  }
  if (merged.size() < 2) throw std::invalid_argument("weight model: degenerate law (single atom)");

  WeightModel model;
  model.scale_ = scale;
  model.threshold_ = threshold_m;
  model.hi_cutoff_ = snap_floor(threshold_m * static_cast<double>(scale));

  double cum = 0.0, mass_hi = 0.0, sum_hi = 0.0, sum_lo = 0.0, sum = 0.0;
  for (const auto& [scaled, prob] : merged) {
    const double value = static_cast<double>(scaled) / static_cast<double>(scale);
    model.atoms_.push_back({value, prob});
    model.scaled_.push_back(scaled);
    cum += prob;
    model.cumulative_.push_back(cum);
    sum += prob * value;
    if (model.is_hi(scaled)) {
      mass_hi += prob;
      sum_hi += prob * value;
    } else {
      sum_lo += prob * value;
    }
  }
  model.cumulative_.back() = 1.0;
  model.p_ = mass_hi;
  model.mean_ = sum;
  if (mass_hi <= 0.0 || mass_hi >= 1.0 - kProbabilityTolerance) {
    throw std::invalid_argument("weight model: p = P(w > m) must lie strictly inside (0, 1)");
  }
  model.mean_hi_ = sum_hi / mass_hi;
  model.mean_lo_ = sum_lo / (1.0 - mass_hi);

  double cum_hi = 0.0, cum_lo = 0.0;
  for (std::size_t k = 0; k < model.atoms_.size(); ++k) {
    if (model.is_hi(model.scaled_[k])) {
      cum_hi += model.atoms_[k].probability / mass_hi;
      model.cumulative_hi_.push_back(cum_hi);
      model.values_hi_.push_back(model.scaled_[k]);
    } else {
      cum_lo += model.atoms_[k].probability / (1.0 - mass_hi);
      model.cumulative_lo_.push_back(cum_lo);
      model.values_lo_.push_back(model.scaled_[k]);
    }
  }
  model.cumulative_hi_.back() = 1.0;
  model.cumulative_lo_.back() = 1.0;
  return model;
}

WeightModel WeightModel::bernoulli(double p) {
  return make({{0.0, 1.0 - p}, {1.0, p}}, 0.0);
}

Weight WeightModel::draw(std::span<const double> cumulative, std::span<const Weight> values, RandomStream& rng) {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), values.size() - 1);
  return values[idx];
}

Weight WeightModel::sample(RandomStream& rng) const {
  return draw(cumulative_, scaled_, rng);
}

Weight WeightModel::sample_conditional(Mode mode, RandomStream& rng) const {
  if (mode == Mode::kHi) return draw(cumulative_hi_, values_hi_, rng);
  return draw(cumulative_lo_, values_lo_, rng);
}

std::vector<std::pair<Weight, double>> WeightModel::conditional_law(Mode mode) const {
  std::vector<std::pair<Weight, double>> law;
  const double mass = mode == Mode::kHi ? p_ : 1.0 - p_;
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    if (is_hi(scaled_[k]) == (mode == Mode::kHi)) law.emplace_back(scaled_[k], atoms_[k].probability / mass);
  }
  return law;
}

std::string WeightModel::describe() const {
  std::ostringstream out;
  out << "atoms=[";
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    out << (k ? "," : "") << "[" << atoms_[k].value << "," << atoms_[k].probability << "]";
  }
  out << "] m=" << threshold_ << " p=" << p_ << " C=" << max_value() << " E(w|hi)=" << mean_hi_;
  return out.str();
}

}  // namespace dlpp
