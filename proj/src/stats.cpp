#include "dlpp/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace dlpp {

double standard_normal(RandomStream& rng) {
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

BinomialSampler::BinomialSampler(std::uint64_t trials, double p) : trials_(trials), p_(p) {
  if (!(p > 0.0) || !(p < 1.0)) throw std::invalid_argument("binomial: p must lie in (0, 1)");
  cdf_.resize(trials + 1);
  double cum = 0.0;
  for (std::uint64_t k = 0; k <= trials; ++k) {
    cum += pmf(k);
    cdf_[k] = cum;
  }
  cdf_.back() = 1.0;
}

double BinomialSampler::pmf(std::uint64_t k) const {
  if (k > trials_) return 0.0;
  const auto n = static_cast<double>(trials_);
  const auto kk = static_cast<double>(k);
  const double log_pmf = std::lgamma(n + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(n - kk + 1.0) +
                         kk * std::log(p_) + (n - kk) * std::log1p(-p_);
  return std::exp(log_pmf);
}

std::uint64_t BinomialSampler::operator()(RandomStream& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return std::min<std::uint64_t>(static_cast<std::uint64_t>(it - cdf_.begin()), trials_);
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const auto n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  // The limits are exact at the ends; rounding would leave ~1e-18 otherwise.
  return {successes == 0 ? 0.0 : std::max(0.0, centre - half), successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

ChiSquareResult chi_square_test(std::span<const std::uint64_t> observed, std::span<const double> probabilities,
                                double min_expected) {
  if (observed.size() != probabilities.size() || observed.empty()) {
    throw std::invalid_argument("chi-square: observed and expected sizes differ");
  }
  const double total = static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::uint64_t{0}));
  // Pool adjacent cells left to right until each pooled cell is large enough.
  std::vector<double> obs, exp;
  double o = 0.0, e = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    o += static_cast<double>(observed[k]);
    e += probabilities[k] * total;
    if (e >= min_expected) {
      obs.push_back(o);
      exp.push_back(e);
      o = e = 0.0;
    }
  }
  if (e > 0.0 || o > 0.0) {
    if (exp.empty()) {
      obs.push_back(o);
      exp.push_back(e);
    } else {
      obs.back() += o;
      exp.back() += e;
    }
  }
  ChiSquareResult result;
  result.degrees_of_freedom = static_cast<int>(exp.size()) - 1;
  for (std::size_t k = 0; k < exp.size(); ++k) {
    if (exp[k] <= 0.0) {
      if (obs[k] > 0.0) return {std::numeric_limits<double>::infinity(), result.degrees_of_freedom, 0.0};
      continue;
    }
    result.statistic += (obs[k] - exp[k]) * (obs[k] - exp[k]) / exp[k];
  }
  if (result.degrees_of_freedom < 1) {
    result.p_value = 1.0;
    return result;
  }
  const boost::math::chi_squared dist(result.degrees_of_freedom);
  result.p_value = boost::math::cdf(boost::math::complement(dist, result.statistic));
  return result;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double d = 0.0;
  while (ia < a.size() && ib < b.size()) {
    const double x = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] == x) ++ia;
    while (ib < b.size() && b[ib] == x) ++ib;
    d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
  }
  KsResult result;
  result.statistic = d;
  const double en = std::sqrt(na * nb / (na + nb));
  const double lambda = (en + 0.12 + 0.11 / en) * d;
  // Q_KS(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)
  if (lambda < 1e-3) {
    result.p_value = 1.0;
    return result;
  }
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12) break;
    sign = -sign;
  }
  result.p_value = std::clamp(2.0 * sum, 0.0, 1.0);
  return result;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sample");
  long double sum = 0.0L;
  for (double x : xs) sum += x;
  return static_cast<double>(sum / static_cast<long double>(xs.size()));
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("variance needs at least two samples");
  const double m = mean(xs);
  long double ss = 0.0L;
  for (double x : xs) ss += (x - m) * (x - m);
  return static_cast<double>(ss / static_cast<long double>(xs.size() - 1));
}

}  // namespace dlpp
