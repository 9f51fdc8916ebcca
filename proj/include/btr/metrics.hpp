#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "btr/sparse_tensor.hpp"

namespace btr {

/// Held-out quality measures; only the fields that apply to the data kind
/// (and to whether ground-truth ranks are known) are set.
struct MetricReport {
  std::optional<double> rmse, mae, psnr;  // continuous
  std::optional<double> auc, acc;         // binary
  std::optional<double> rank_err;

  /// Key-value lines ("rmse 0.123"), one per set field, fixed order.
  std::string to_text() const;
};

/// Mean relative rank deviation: (1/D) sum_d |est_d - true_d| / true_d.
double rank_error(const std::vector<std::size_t>& estimated,
                  const std::vector<std::size_t>& truth);

/// Compare predictions (aligned with test entries) against held-out values.
/// Continuous: rmse, mae and psnr from data_range. Binary: predictions are
/// success probabilities; auc is the tie-corrected rank statistic and acc
/// thresholds at 1/2 (auc is left unset when only one class is present).
MetricReport compute_metrics(std::span<const double> predictions,
                             const SparseTensor& test, double data_range);

}  // namespace btr
