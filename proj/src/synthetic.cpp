#include "btr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "btr/rng.hpp"

namespace btr {

void SyntheticSpec::validate() const {
  if (shape.empty()) throw InputError("shape must have at least one mode");
  for (std::size_t e : shape)
    if (e == 0) throw InputError("mode extents must be positive");
  if (true_rank < 1) throw InputError("true rank must be at least 1");
  if (missing_rate < 0.0 || missing_rate >= 1.0)
    throw InputError("missing rate must lie in [0, 1)");
  if (kind == DataKind::continuous && !(snr_db > 0.0) &&
      !std::isinf(snr_db))
    throw InputError("snr must be positive (or infinite for noiseless)");
  if (kind == DataKind::binary && !(logit_gain > 0.0))
    throw InputError("logit gain must be positive");
}

namespace {

void decode_index(std::size_t linear, const std::vector<std::size_t>& shape,
                  std::vector<std::size_t>& idx) {
  for (std::size_t d = shape.size(); d-- > 0;) {
    idx[d] = linear % shape[d];
    linear /= shape[d];
  }
}

double noise_sigma_for(double snr_db) {
  // Signal variance is 1 after standardization, so SNR fixes sigma alone.
  return std::isinf(snr_db) ? 0.0 : std::sqrt(std::pow(10.0, -snr_db / 10.0));
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::size_t max_cells) {
  spec.validate();
  Rng rng(spec.seed);
  TRModel truth = TRModel::random(spec.shape, spec.true_rank, 1.0, rng);
  std::vector<double> signal = reconstruct_dense(truth, max_cells);
  const std::size_t cells = signal.size();

  double mean = 0.0;
  for (double v : signal) mean += v;
  mean /= static_cast<double>(cells);
  double var = 0.0;
  for (double v : signal) var += (v - mean) * (v - mean);
  var /= static_cast<double>(cells);
  if (!(var > 0.0)) throw NumericError("generated signal is constant; cannot standardize");
  // Binary signals become logits: standardized, then spread by the gain.
  const double scale = (spec.kind == DataKind::binary ? spec.logit_gain : 1.0) /
                       std::sqrt(var);
  for (double& v : signal) v = (v - mean) * scale;
  const double sigma =
      spec.kind == DataKind::continuous ? noise_sigma_for(spec.snr_db) : 0.0;

  const auto [lo, hi] = std::minmax_element(signal.begin(), signal.end());
  const double range = *hi - *lo;

  // Values first, then the train/test mask, so the same seed realizes the
  // same noise regardless of the missing rate.
  std::vector<double> values(cells);
  if (spec.kind == DataKind::continuous) {
    for (std::size_t n = 0; n < cells; ++n)
      values[n] = signal[n] + (sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0);
  } else {
    for (std::size_t n = 0; n < cells; ++n)
      values[n] = rng.bernoulli(sigmoid(signal[n])) ? 1.0 : 0.0;
  }

  SyntheticData out{SparseTensor(spec.shape, spec.kind),
                    SparseTensor(spec.shape, spec.kind), std::move(truth), sigma,
                    range};
  std::vector<std::size_t> idx(spec.shape.size());
  for (std::size_t n = 0; n < cells; ++n) {
    decode_index(n, spec.shape, idx);
    if (rng.uniform() < spec.missing_rate)
      out.test.add(idx, values[n]);
    else
      out.train.add(idx, values[n]);
  }
  return out;
}

SyntheticData generate_synthetic_sparse(const SyntheticSpec& spec,
                                        std::size_t n_train, std::size_t n_test) {
  spec.validate();
  if (n_train == 0) throw InputError("need at least one training entry");
  double cells_d = 1.0;
  for (std::size_t e : spec.shape) cells_d *= static_cast<double>(e);
  if (static_cast<double>(n_train) + static_cast<double>(n_test) > 0.5 * cells_d)
    throw InputError("requested entries exceed half the tensor; use the dense path");

  Rng rng(spec.seed);
  TRModel truth = TRModel::random(spec.shape, spec.true_rank, 1.0, rng);

  // Exact moments, so this path agrees in distribution with the dense one.
  const auto [mean, var] = tr_mean_var(truth);
  if (!(var > 0.0)) throw NumericError("generated signal is constant; cannot standardize");
  const double scale = (spec.kind == DataKind::binary ? spec.logit_gain : 1.0) /
                       std::sqrt(var);
  const double sigma =
      spec.kind == DataKind::continuous ? noise_sigma_for(spec.snr_db) : 0.0;

  const std::size_t want = n_train + n_test;
  std::unordered_set<std::size_t> seen;
  seen.reserve(want * 2);
  std::vector<std::size_t> linear;
  linear.reserve(want);
  while (linear.size() < want) {
    std::size_t cell = 0;
    for (std::size_t e : spec.shape) {
      const std::size_t i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(e));
      cell = cell * e + std::min(i, e - 1);
    }
    if (seen.insert(cell).second) linear.push_back(cell);
  }

  SyntheticData out{SparseTensor(spec.shape, spec.kind),
                    SparseTensor(spec.shape, spec.kind), std::move(truth), sigma,
                    0.0};
  out.train.reserve(n_train);
  out.test.reserve(n_test);

  const std::size_t r = out.truth.max_rank();
  std::vector<double> buf_a(r * r), buf_b(r * r);
  std::vector<std::size_t> idx(spec.shape.size());
  std::vector<std::uint32_t> idx32(spec.shape.size());
  double sig_lo = 0.0, sig_hi = 0.0;
  for (std::size_t n = 0; n < want; ++n) {
    decode_index(linear[n], spec.shape, idx);
    for (std::size_t d = 0; d < idx.size(); ++d) idx32[d] = static_cast<std::uint32_t>(idx[d]);
    double x = (eval_entry_ws(out.truth, idx32.data(), buf_a.data(), buf_b.data()) -
                mean) *
               scale;
    if (n == 0) {
      sig_lo = sig_hi = x;
    } else {
      sig_lo = std::min(sig_lo, x);
      sig_hi = std::max(sig_hi, x);
    }
    double y;
    if (spec.kind == DataKind::continuous)
      y = x + (sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0);
    else
      y = rng.bernoulli(sigmoid(x)) ? 1.0 : 0.0;
    if (n < n_train)
      out.train.add(idx, y);
    else
      out.test.add(idx, y);
  }
  // Range over the sampled cells only; the dense path sees every cell.
  out.signal_range = sig_hi - sig_lo;
  return out;
}

}  // namespace btr
