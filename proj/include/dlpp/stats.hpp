#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dlpp/rng.hpp"

namespace dlpp {

/// Standard normal by Box-Muller on the stream's own uniforms (the standard
/// library's distributions are implementation-defined and would break
/// cross-toolchain replay).
double standard_normal(RandomStream& rng);

double normal_cdf(double x);

/// Inversion sampler for Binomial(trials, p) over a precomputed CDF table.
class BinomialSampler {
 public:
  BinomialSampler(std::uint64_t trials, double p);
  std::uint64_t operator()(RandomStream& rng) const;
  std::uint64_t trials() const { return trials_; }
  double p() const { return p_; }
  double pmf(std::uint64_t k) const;

 private:
  std::uint64_t trials_;
  double p_;
  std::vector<double> cdf_;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval for `successes` out of `trials` at normal quantile z.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054);

struct ChiSquareResult {
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
};

/// Goodness of fit of observed counts against expected probabilities. Cells
/// with expected count below `min_expected` are pooled into their neighbour.
ChiSquareResult chi_square_test(std::span<const std::uint64_t> observed, std::span<const double> probabilities,
                                double min_expected = 5.0);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov tail.
/// Conservative for discrete data.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

double mean(std::span<const double> xs);
/// Unbiased sample variance.
double sample_variance(std::span<const double> xs);

}  // namespace dlpp
