#pragma once

#include <cstddef>
#include <vector>

#include "btr/rng.hpp"

namespace btr {

/// Shape/rate pair of a Gamma density.
struct GammaParams {
  double shape;
  double rate;
};

/// Multiplicative-shrinkage state: one positive multiplier per bond index.
/// The precision of bond weight r in mode d is the running product
/// phi(d)[r] = delta[d][0] * ... * delta[d][r], so later bond indices are
/// pushed progressively harder toward zero.
struct MgpState {
  std::vector<std::vector<double>> delta;

  /// Multipliers initialized at their prior mean a0.
  static MgpState prior_mean(const std::vector<std::size_t>& ranks, double a0);

  /// Weight precisions for one mode (cumulative products of delta).
  std::vector<double> phi(std::size_t d) const;
};

/// Full conditional of delta[d][r] given the mode's bond weights and the
/// other multipliers: Gamma with shape a0 + (R - r)/2 and rate
/// 1 + (1/2) sum_{h >= r} lambda_h^2 prod_{l <= h, l != r} delta_l.
GammaParams delta_conditional(double a0, const std::vector<double>& lambda,
                              const std::vector<double>& delta, std::size_t r);

/// Gibbs pass over all multipliers of all modes, in place.
void sample_delta(MgpState& mgp, const std::vector<std::vector<double>>& weights,
                  double a0, Rng& rng);

}  // namespace btr
