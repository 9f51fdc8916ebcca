#pragma once

#include "btr/rng.hpp"

namespace btr {

/// Exact draw from the Polya-Gamma distribution PG(1, c).
///
/// Alternating-series rejection sampler: the target is J*(1, c/2)/4 where
/// J* has a known series density; proposals mix a truncated exponential
/// (right tail) with a truncated inverse-Gaussian (left of the cutoff).
/// No truncation error, acceptance rate stays near 1 for all c.
double sample_pg(Rng& rng, double c);

/// E[omega] for omega ~ PG(1, c): tanh(c/2) / (2c), with the removable
/// singularity at c = 0 handled by series (value 1/4).
double polya_gamma_mean(double c);

}  // namespace btr
