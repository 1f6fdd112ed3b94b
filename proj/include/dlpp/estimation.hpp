#pragma once

// Central moments with bootstrap error bars and log-log exponent fits.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dlpp/rng.hpp"

namespace dlpp {

/// Resample b of an estimate draws from StreamKey{seed, purpose, stream, b},
/// so resamples can run in any order and still replay bit-for-bit.
struct BootstrapConfig {
  int resamples = 1000;
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;
  std::uint8_t purpose = purpose::kBootstrap;
};

struct MomentEstimate {
  double r = 2.0;
  std::size_t sample_count = 0;
  double sample_mean = 0.0;
  double central_moment = 0.0;  // (1/S) sum |x - mean|^r
  double bootstrap_stderr = 0.0;
  std::vector<double> samples;  // kept only on request
};

/// Plug-in r-th central moment. Deviations are formed as S*x - sum(x) before
/// dividing, so integer-valued samples give a result that is exactly
/// translation invariant.
double central_moment_value(std::span<const double> samples, double r);

/// Throws std::invalid_argument for fewer than 2 samples or r < 1.
MomentEstimate central_moment(std::span<const double> samples, double r, const BootstrapConfig& bootstrap = {},
                              bool keep_samples = false);

/// Several orders at once, sharing the bootstrap resamples.
std::vector<MomentEstimate> central_moments(std::span<const double> samples, std::span<const double> orders,
                                            const BootstrapConfig& bootstrap = {});

struct FitPoint {
  double n = 0.0;
  MomentEstimate estimate;
};

struct ExponentFit {
  double r = 2.0;
  std::vector<double> log_n;
  std::vector<double> log_moment;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_ci_lo = 0.0;
  double slope_ci_hi = 0.0;
  /// Slope of log M_r^{1/r}; equals slope / r.
  double root_slope = 0.0;
  std::vector<std::string> warnings;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
LineFit least_squares(std::span<const double> x, std::span<const double> y);

struct FitConfig {
  int resamples = 1000;
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;
  double confidence = 0.95;
};

/// OLS of log M_r against log n. Non-positive moments are dropped with a
/// warning; fewer than 3 distinct usable n values throws. The slope interval
/// comes from refitting with every log M_i perturbed by a Gaussian of
/// standard deviation stderr_i / M_i.
ExponentFit fit_exponent(std::span<const FitPoint> points, double r, const FitConfig& config = {});

}  // namespace dlpp
