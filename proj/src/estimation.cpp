#include "dlpp/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "dlpp/stats.hpp"

namespace dlpp {

namespace {

double moment_from(std::span<const double> xs, double r) {
  const auto count = static_cast<long double>(xs.size());
  long double sum = 0.0L;
  for (double x : xs) sum += x;
  long double acc = 0.0L;
  for (double x : xs) {
    const long double dev = count * static_cast<long double>(x) - sum;
    acc += std::pow(std::fabs(dev), static_cast<long double>(r));
  }
  return static_cast<double>(acc / std::pow(count, static_cast<long double>(r) + 1.0L));
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

void check_inputs(std::span<const double> samples, double r) {
  if (samples.size() < 2) throw std::invalid_argument("central moment needs at least two samples");
  if (!(r >= 1.0)) throw std::invalid_argument("central moment order must be >= 1");
}

}  // namespace

double central_moment_value(std::span<const double> samples, double r) {
  check_inputs(samples, r);
  return moment_from(samples, r);
}

std::vector<MomentEstimate> central_moments(std::span<const double> samples, std::span<const double> orders,
                                            const BootstrapConfig& bootstrap) {
  for (double r : orders) check_inputs(samples, r);
  std::vector<MomentEstimate> out;
  for (double r : orders) {
    MomentEstimate e;
    e.r = r;
    e.sample_count = samples.size();
    e.sample_mean = mean(samples);
    e.central_moment = moment_from(samples, r);
    out.push_back(std::move(e));
  }
  if (bootstrap.resamples < 2) return out;

  std::vector<std::vector<double>> boot(orders.size());
  std::vector<double> resample(samples.size());
  for (int b = 0; b < bootstrap.resamples; ++b) {
    RandomStream rng(StreamKey{bootstrap.seed, bootstrap.purpose, bootstrap.stream, static_cast<std::uint32_t>(b)});
    for (auto& x : resample) x = samples[rng.below(samples.size())];
    for (std::size_t k = 0; k < orders.size(); ++k) boot[k].push_back(moment_from(resample, orders[k]));
  }
  for (std::size_t k = 0; k < orders.size(); ++k) out[k].bootstrap_stderr = std::sqrt(sample_variance(boot[k]));
  return out;
}

MomentEstimate central_moment(std::span<const double> samples, double r, const BootstrapConfig& bootstrap,
                              bool keep_samples) {
  const double orders[] = {r};
  MomentEstimate e = std::move(central_moments(samples, orders, bootstrap).front());
  if (keep_samples) e.samples.assign(samples.begin(), samples.end());
  return e;
}

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least squares: need matching points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("least squares: x values are all equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy <= 0.0) {
    fit.r_squared = 1.0;
  } else {
    double ss_res = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double resid = y[k] - (fit.slope * x[k] + fit.intercept);
      ss_res += resid * resid;
    }
    fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  }
  return fit;
}

ExponentFit fit_exponent(std::span<const FitPoint> points, double r, const FitConfig& config) {
  ExponentFit fit;
  fit.r = r;
  std::vector<double> rel_err;
  std::set<double> distinct;
  for (const auto& point : points) {
    if (!(point.estimate.central_moment > 0.0)) {
      fit.warnings.push_back("dropped n=" + std::to_string(static_cast<long long>(point.n)) +
                             ": non-positive moment estimate");
      continue;
    }
    if (!(point.n > 0.0)) throw std::invalid_argument("fit_exponent: n must be positive");
    fit.log_n.push_back(std::log(point.n));
    fit.log_moment.push_back(std::log(point.estimate.central_moment));
    rel_err.push_back(point.estimate.bootstrap_stderr / point.estimate.central_moment);
    distinct.insert(point.n);
  }
  if (distinct.size() < 3) throw std::invalid_argument("fit_exponent: need at least 3 distinct n values");

  const LineFit line = least_squares(fit.log_n, fit.log_moment);
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.r_squared = line.r_squared;
  fit.root_slope = line.slope / r;
  fit.slope_ci_lo = fit.slope_ci_hi = fit.slope;

  if (config.resamples >= 2) {
    std::vector<double> slopes;
    slopes.reserve(static_cast<std::size_t>(config.resamples));
    std::vector<double> y(fit.log_moment.size());
    for (int b = 0; b < config.resamples; ++b) {
      RandomStream rng(StreamKey{config.seed, purpose::kFitResample, config.stream, static_cast<std::uint32_t>(b)});
      for (std::size_t k = 0; k < y.size(); ++k) y[k] = fit.log_moment[k] + rel_err[k] * standard_normal(rng);
      slopes.push_back(least_squares(fit.log_n, y).slope);
    }
    std::sort(slopes.begin(), slopes.end());
    const double tail = (1.0 - config.confidence) / 2.0;
    fit.slope_ci_lo = quantile_sorted(slopes, tail);
    fit.slope_ci_hi = quantile_sorted(slopes, 1.0 - tail);
  }
  return fit;
}

}  // namespace dlpp
