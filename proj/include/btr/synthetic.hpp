#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "btr/common.hpp"
#include "btr/sparse_tensor.hpp"
#include "btr/tr_model.hpp"

namespace btr {

/// Recipe for a simulated completion problem.
struct SyntheticSpec {
  std::vector<std::size_t> shape;
  std::size_t true_rank = 5;
  DataKind kind = DataKind::continuous;
  /// Signal-to-noise ratio in dB; infinity means noiseless. Ignored for
  /// binary data, where the noise is the Bernoulli draw itself.
  double snr_db = std::numeric_limits<double>::infinity();
  /// Binary data only: the standardized signal is multiplied by this gain
  /// before the Bernoulli draw. Unit-variance logits make nearly every
  /// probability land near 1/2, so the gain fixes the task difficulty at a
  /// level that is stable across seeds.
  double logit_gain = 8.0;
  /// Fraction of cells withheld as the test set.
  double missing_rate = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  SparseTensor train;
  SparseTensor test;
  TRModel truth;        // generating cores, before any standardization
  double noise_sigma;   // 0 when noiseless or binary
  double signal_range;  // max - min of the noiseless signal
};

/// Dense-path generator: materializes the full tensor (subject to
/// max_cells), standardizes continuous signals to zero mean and unit
/// variance before adding noise, and splits cells into train/test by
/// missing_rate. Binary signals stay on their natural logit scale and are
/// thresholded through a Bernoulli draw.
SyntheticData generate_synthetic(const SyntheticSpec& spec,
                                 std::size_t max_cells = 100000000);

/// Sparse-path generator for sizes whose dense form is out of reach: draws
/// n_train + n_test distinct cells uniformly and evaluates only those.
/// Continuous standardization uses the exact moments from tr_mean_var, so
/// the two paths agree in distribution.
SyntheticData generate_synthetic_sparse(const SyntheticSpec& spec,
                                        std::size_t n_train, std::size_t n_test);

}  // namespace btr
