#include "btr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace btr {

std::string MetricReport::to_text() const {
  std::ostringstream os;
  os << std::setprecision(10);
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) os << key << ' ' << *v << '\n';
  };
  put("rmse", rmse);
  put("mae", mae);
  put("psnr", psnr);
  put("auc", auc);
  put("acc", acc);
  put("rank_err", rank_err);
  return os.str();
}

double rank_error(const std::vector<std::size_t>& estimated,
                  const std::vector<std::size_t>& truth) {
  if (estimated.size() != truth.size() || truth.empty())
    throw InputError("rank vectors must have equal, non-zero length");
  double acc = 0.0;
  for (std::size_t d = 0; d < truth.size(); ++d) {
    if (truth[d] == 0) throw InputError("true ranks must be positive");
    const double diff = static_cast<double>(estimated[d]) - static_cast<double>(truth[d]);
    acc += std::fabs(diff) / static_cast<double>(truth[d]);
  }
  return acc / static_cast<double>(truth.size());
}

MetricReport compute_metrics(std::span<const double> predictions,
                             const SparseTensor& test, double data_range) {
  if (predictions.size() != test.size())
    throw InputError("prediction count does not match the test set");
  if (test.size() == 0) throw InputError("test set is empty");
  MetricReport rep;

  if (test.kind() == DataKind::continuous) {
    double se = 0.0, ae = 0.0;
    for (std::size_t n = 0; n < test.size(); ++n) {
      const double e = predictions[n] - test.value(n);
      se += e * e;
      ae += std::fabs(e);
    }
    const double rmse = std::sqrt(se / static_cast<double>(test.size()));
    rep.rmse = rmse;
    rep.mae = ae / static_cast<double>(test.size());
    if (data_range > 0.0)
      rep.psnr = rmse > 0.0 ? 20.0 * std::log10(data_range / rmse)
                            : std::numeric_limits<double>::infinity();
    return rep;
  }

  std::size_t n_pos = 0, correct = 0;
  for (std::size_t n = 0; n < test.size(); ++n) {
    const double p = predictions[n];
    if (!(p >= 0.0 && p <= 1.0))
      throw InputError("binary predictions must be probabilities in [0, 1]");
    const bool y = test.value(n) == 1.0;
    n_pos += y ? 1 : 0;
    correct += ((p >= 0.5) == y) ? 1 : 0;
  }
  rep.acc = static_cast<double>(correct) / static_cast<double>(test.size());

  const std::size_t n_neg = test.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return rep;  // AUC undefined with one class

  // Mann-Whitney with midranks for ties.
  std::vector<std::size_t> order(test.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a] < predictions[b];
  });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           predictions[order[j + 1]] == predictions[order[i]])
      ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (test.value(order[k]) == 1.0) rank_sum_pos += midrank;
    i = j + 1;
  }
  const double u = rank_sum_pos -
                   0.5 * static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0);
  rep.auc = u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
  return rep;
}

}  // namespace btr
