#pragma once

// Statistical helpers for the test suite: distribution CDFs, KS tests, and
// the independently derived oracles the samplers are checked against. Kept
// header-only and dependency-free so every test binary can use them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "btr/rng.hpp"

namespace teststat {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Regularized lower incomplete gamma P(a, x), series for x < a + 1 and
/// Lentz continued fraction otherwise.
inline double lower_gamma_reg(double a, double x) {
  if (x <= 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a, sum = term, ap = a;
    for (int k = 0; k < 500; ++k) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int k = 1; k < 500; ++k) {
    const double an = -k * (k - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

inline double gamma_cdf(double x, double shape, double rate) {
  return lower_gamma_reg(shape, rate * x);
}

/// Kolmogorov tail probability Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-12) break;
    sign = -sign;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

/// One-sample KS p-value of a sample against a CDF.
template <class Cdf>
double ks_test(std::vector<double> sample, Cdf&& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
  }
  const double sn = std::sqrt(n);
  return kolmogorov_q(d * (sn + 0.12 + 0.11 / sn));
}

/// Two-sample KS p-value.
inline double ks2_test(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return kolmogorov_q(d * (ne + 0.12 + 0.11 / ne));
}

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Standard error of the mean of a correlated trace, by batch means.
inline double batch_means_se(const std::vector<double>& trace, std::size_t n_batches = 50) {
  const std::size_t len = trace.size() / n_batches;
  if (len < 2) throw std::invalid_argument("trace too short for batch means");
  std::vector<double> bm(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += trace[b * len + i];
    bm[b] = s / static_cast<double>(len);
  }
  return sd(bm) / std::sqrt(static_cast<double>(n_batches));
}

/// PG(1, c) as a weighted infinite sum of exponentials, truncated with a
/// mean-matching tail correction: omega = (1/(2 pi^2)) sum_k g_k / ((k-1/2)^2
/// + c^2/(4 pi^2)), g_k iid standard exponential. Independent of the exact
/// rejection sampler it validates.
inline double pg_gamma_sum(btr::Rng& rng, double c, int terms = 200) {
  const double pi = 3.14159265358979323846;
  const double shift = c * c / (4.0 * pi * pi);
  double sum = 0.0, tail = 0.0;
  for (int k = 1; k <= terms; ++k) {
    const double denom = (k - 0.5) * (k - 0.5) + shift;
    sum += rng.exponential() / denom;
  }
  // E[g_k] = 1, so the omitted terms contribute their deterministic mean.
  for (int k = terms + 1; k <= 200000; ++k) {
    const double t = 1.0 / ((k - 0.5) * (k - 0.5) + shift);
    tail += t;
    if (t < 1e-12 * tail) break;
  }
  return (sum + tail) / (2.0 * pi * pi);
}

/// Variance of PG(1, c) from the log-Laplace transform
/// K(t) = log cosh(c/2) - log cosh(sqrt(c^2/4 + t/2)) of -omega, by central
/// second difference. Analytic-form-free oracle for the sampler moments.
inline double pg_variance(double c) {
  const auto k = [c](double t) {
    const double arg = c * c / 4.0 + t / 2.0;
    // cosh(sqrt(arg)) continues to cos(sqrt(-arg)) left of zero.
    const double ch = arg >= 0.0 ? std::cosh(std::sqrt(arg)) : std::cos(std::sqrt(-arg));
    return std::log(std::cosh(c / 2.0)) - std::log(ch);
  };
  const double h = 1e-4;
  return (k(h) - 2.0 * k(0.0) + k(-h)) / (h * h);
}

/// Central finite difference of a scalar function of one coordinate.
template <class F>
double central_diff(F&& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace teststat
