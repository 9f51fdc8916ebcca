#include "btr/polya_gamma.hpp"

#include <cmath>

namespace btr {
namespace {

constexpr double kPi = 3.141592653589793238462643383280;
// Series cutoff between the inverse-Gaussian and exponential proposal
// regions. 0.64 is the standard choice; both series converge fast there.
constexpr double kTrunc = 0.64;

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

// Coefficient a_n(x) of the alternating series for the J*(1, .) density,
// in its left (x <= t) or right (x > t) form.
double series_coef(int n, double x) {
  const double np = n + 0.5;
  if (x > kTrunc)
    return kPi * np * std::exp(-np * np * kPi * kPi * x * 0.5);
  return kPi * np * std::pow(2.0 / (kPi * x), 1.5) *
         std::exp(-2.0 * np * np / x);
}

// Probability that the proposal should come from the right (exponential)
// region rather than the left (inverse-Gaussian) one, for tilt z.
double right_region_prob(double z) {
  const double fz = kPi * kPi * 0.125 + z * z * 0.5;
  const double sqrt_inv_t = std::sqrt(1.0 / kTrunc);
  const double b = sqrt_inv_t * (kTrunc * z - 1.0);
  const double a = -sqrt_inv_t * (kTrunc * z + 1.0);
  const double x0 = std::log(fz) + fz * kTrunc;
  const double xb = x0 - z + std::log(normal_cdf(b));
  const double xa = x0 + z + std::log(normal_cdf(a));
  const double qdivp = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + qdivp);
}

// Inverse-Gaussian(mu, 1) via Michael-Schucany-Haas.
double sample_invgauss(Rng& rng, double mu) {
  const double nu = rng.normal();
  const double y = nu * nu;
  const double mu_y = mu * y;
  double x = mu + 0.5 * mu * (mu_y - std::sqrt(4.0 * mu_y + mu_y * mu_y));
  if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
  return x;
}

// Inverse-Gaussian(1/z, 1) truncated to (0, kTrunc].
double sample_trunc_invgauss(Rng& rng, double z) {
  if (z < 1.0 / kTrunc) {
    // Mean lies right of the cutoff: sample chi-squared-based proposal for
    // the z = 0 case and thin by exp(-z^2 x / 2).
    for (;;) {
      double e1, e2;
      do {
        e1 = rng.exponential();
        e2 = rng.exponential();
      } while (e1 * e1 > 2.0 * e2 / kTrunc);
      const double x = kTrunc / ((1.0 + kTrunc * e1) * (1.0 + kTrunc * e1));
      if (std::log(rng.uniform_pos()) <= -0.5 * z * z * x) return x;
    }
  }
  for (;;) {
    const double x = sample_invgauss(rng, 1.0 / z);
    if (x <= kTrunc) return x;
  }
}

}  // namespace

double sample_pg(Rng& rng, double c) {
  // PG(1, c) is symmetric in c; work with the half-tilt z >= 0.
  const double z = std::fabs(c) * 0.5;
  const double fz = kPi * kPi * 0.125 + z * z * 0.5;
  const double p_right = right_region_prob(z);
  for (;;) {
    double x;
    if (rng.uniform() < p_right)
      x = kTrunc + rng.exponential() / fz;
    else
      x = sample_trunc_invgauss(rng, z);

    // Squeeze on the alternating series: partial sums bracket the density.
    double s = series_coef(0, x);
    const double y = rng.uniform() * s;
    for (int n = 1;; ++n) {
      if (n & 1) {
        s -= series_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += series_coef(n, x);
        if (y > s) break;
      }
    }
  }
}

double polya_gamma_mean(double c) {
  const double a = std::fabs(c);
  if (a < 1e-3) {
    // tanh(c/2)/(2c) = 1/4 - c^2/48 + c^4/480 - ...
    const double c2 = c * c;
    return 0.25 - c2 / 48.0 + c2 * c2 / 480.0;
  }
  return std::tanh(0.5 * c) / (2.0 * c);
}

}  // namespace btr
