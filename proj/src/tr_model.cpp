#include "btr/tr_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "btr/smallmat.hpp"

namespace btr {

std::size_t TRModel::max_rank() const {
  return *std::max_element(ranks.begin(), ranks.end());
}

void TRModel::validate() const {
  const std::size_t d_count = order();
  if (d_count == 0) throw InputError("model must have at least one mode");
  if (ranks.size() != d_count || cores.size() != d_count ||
      weights.size() != d_count)
    throw InputError("model field lengths disagree with the order");
  for (std::size_t d = 0; d < d_count; ++d) {
    if (shape[d] == 0) throw InputError("mode " + std::to_string(d + 1) + " has zero extent");
    if (ranks[d] == 0) throw InputError("bond " + std::to_string(d + 1) + " has zero rank");
    if (cores[d].size() != shape[d] * slice_size(d))
      throw InputError("core " + std::to_string(d + 1) + " buffer size mismatch");
    if (weights[d].size() != ranks[d])
      throw InputError("weight vector " + std::to_string(d + 1) + " size mismatch");
    for (double v : cores[d])
      if (!std::isfinite(v)) throw InputError("core " + std::to_string(d + 1) + " has non-finite entries");
    for (double v : weights[d])
      if (!std::isfinite(v)) throw InputError("weights " + std::to_string(d + 1) + " have non-finite entries");
  }
}

TRModel TRModel::random(const std::vector<std::size_t>& shape, std::size_t rank,
                        double sigma, Rng& rng) {
  if (rank == 0) throw InputError("rank must be at least 1");
  TRModel m;
  m.shape = shape;
  m.ranks.assign(shape.size(), rank);
  m.cores.resize(shape.size());
  m.weights.resize(shape.size());
  for (std::size_t d = 0; d < shape.size(); ++d) {
    m.cores[d].resize(shape[d] * rank * rank);
    for (double& v : m.cores[d]) v = rng.normal(0.0, sigma);
    m.weights[d].assign(rank, 1.0);
  }
  m.validate();
  return m;
}

namespace {

// Copy slice (d, i) with bond weights folded into the columns.
void absorbed_slice(const TRModel& m, std::size_t d, std::size_t i, double* out) {
  const std::size_t rin = m.bond_in(d), rout = m.bond_out(d);
  const double* g = m.slice(d, i);
  const double* w = m.weights[d].data();
  for (std::size_t a = 0; a < rin; ++a)
    for (std::size_t b = 0; b < rout; ++b) out[a * rout + b] = g[a * rout + b] * w[b];
}

}  // namespace

double eval_entry_ws(const TRModel& m, const std::uint32_t* index, double* buf_a,
                     double* buf_b) {
  const std::size_t d_count = m.order();
  const std::size_t rows = m.bond_in(0);
  absorbed_slice(m, 0, index[0], buf_a);
  std::size_t cols = m.bond_out(0);
  for (std::size_t d = 1; d < d_count; ++d) {
    const std::size_t next_cols = m.bond_out(d);
    smallmat::mul(buf_a, m.slice(d, index[d]), buf_b, rows, cols, next_cols);
    smallmat::scale_cols(buf_b, rows, next_cols, m.weights[d].data());
    std::swap(buf_a, buf_b);
    cols = next_cols;
  }
  return smallmat::trace(buf_a, rows);
}

double eval_entry(const TRModel& m, const std::uint32_t* index) {
  const std::size_t r = m.max_rank();
  std::vector<double> a(r * r), b(r * r);
  return eval_entry_ws(m, index, a.data(), b.data());
}

double eval_entry(const TRModel& m, const std::vector<std::size_t>& index) {
  if (index.size() != m.order())
    throw InputError("entry index has wrong number of modes");
  std::vector<std::uint32_t> idx(index.size());
  for (std::size_t d = 0; d < index.size(); ++d) {
    if (index[d] >= m.shape[d]) throw InputError("index out of bounds in mode " + std::to_string(d + 1));
    idx[d] = static_cast<std::uint32_t>(index[d]);
  }
  return eval_entry(m, idx.data());
}

TRModel absorb_weights(const TRModel& model) {
  TRModel out = model;
  for (std::size_t d = 0; d < out.order(); ++d) {
    const std::size_t rin = out.bond_in(d), rout = out.bond_out(d);
    for (std::size_t i = 0; i < out.shape[d]; ++i)
      smallmat::scale_cols(out.slice(d, i), rin, rout, out.weights[d].data());
    out.weights[d].assign(rout, 1.0);
  }
  return out;
}

std::vector<double> subchain_slice(const TRModel& m, std::size_t mode,
                                   const std::vector<std::size_t>& index) {
  const std::size_t d_count = m.order();
  if (mode >= d_count) throw InputError("mode out of range");
  if (index.size() != d_count) throw InputError("entry index has wrong number of modes");
  for (std::size_t d = 0; d < d_count; ++d)
    if (index[d] >= m.shape[d]) throw InputError("index out of bounds in mode " + std::to_string(d + 1));

  const std::size_t rows = m.bond_out(mode);
  if (d_count == 1) {
    std::vector<double> eye(rows * rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) eye[i * rows + i] = 1.0;
    return eye;
  }
  const std::size_t r = m.max_rank();
  std::vector<double> a(r * r), b(r * r);
  std::size_t k = (mode + 1) % d_count;
  absorbed_slice(m, k, index[k], a.data());
  std::size_t cols = m.bond_out(k);
  for (std::size_t j = 2; j < d_count; ++j) {
    k = (mode + j) % d_count;
    const std::size_t next_cols = m.bond_out(k);
    smallmat::mul(a.data(), m.slice(k, index[k]), b.data(), rows, cols, next_cols);
    smallmat::scale_cols(b.data(), rows, next_cols, m.weights[k].data());
    std::swap(a, b);
    cols = next_cols;
  }
  a.resize(rows * cols);
  return a;
}

std::vector<double> reconstruct_dense(const TRModel& m, std::size_t max_cells) {
  const std::size_t d_count = m.order();
  std::size_t total = 1;
  for (std::size_t e : m.shape) {
    if (total > max_cells / e)
      throw CapacityError("dense reconstruction exceeds the cell limit");
    total *= e;
  }

  // Pre-absorb weights once; the recursion then only multiplies slices.
  const TRModel plain = absorb_weights(m);
  const std::size_t outer = plain.bond_in(0);

  std::vector<double> out(total);
  // Partial chain products per recursion depth; level d holds
  // H[0][i0] ... H[d-1][i_{d-1}], an outer x bond_in(d) matrix.
  std::vector<std::vector<double>> level(d_count + 1);
  for (std::size_t d = 0; d <= d_count; ++d)
    level[d].resize(outer * (d < d_count ? plain.bond_in(d) : outer));
  for (std::size_t i = 0; i < outer; ++i)
    for (std::size_t j = 0; j < outer; ++j) level[0][i * outer + j] = (i == j) ? 1.0 : 0.0;

  std::size_t pos = 0;
  auto rec = [&](auto&& self, std::size_t d) -> void {
    const std::size_t cols = plain.bond_in(d);
    if (d == d_count - 1) {
      for (std::size_t i = 0; i < plain.shape[d]; ++i) {
        const double* p = level[d].data();
        const double* h = plain.slice(d, i);
        double v = 0.0;
        for (std::size_t a = 0; a < outer; ++a)
          for (std::size_t b = 0; b < cols; ++b) v += p[a * cols + b] * h[b * outer + a];
        out[pos++] = v;
      }
      return;
    }
    for (std::size_t i = 0; i < plain.shape[d]; ++i) {
      smallmat::mul(level[d].data(), plain.slice(d, i), level[d + 1].data(), outer,
                    cols, plain.bond_out(d));
      self(self, d + 1);
    }
  };
  rec(rec, 0);
  return out;
}

std::pair<double, double> tr_mean_var(const TRModel& m) {
  const TRModel plain = absorb_weights(m);
  const std::size_t d_count = plain.order();
  const std::size_t r = plain.max_rank();

  // First moment: chain product of per-mode slice sums.
  std::vector<double> sum_a(r * r), sum_b(r * r), slice_sum(r * r);
  auto mode_sum = [&](std::size_t d, double* out) {
    const std::size_t n = plain.slice_size(d);
    std::fill(out, out + n, 0.0);
    for (std::size_t i = 0; i < plain.shape[d]; ++i) {
      const double* g = plain.slice(d, i);
      for (std::size_t k = 0; k < n; ++k) out[k] += g[k];
    }
  };
  const std::size_t rows = plain.bond_in(0);
  mode_sum(0, sum_a.data());
  std::size_t cols = plain.bond_out(0);
  for (std::size_t d = 1; d < d_count; ++d) {
    mode_sum(d, slice_sum.data());
    smallmat::mul(sum_a.data(), slice_sum.data(), sum_b.data(), rows, cols,
                  plain.bond_out(d));
    std::swap(sum_a, sum_b);
    cols = plain.bond_out(d);
  }
  const double total_sum = smallmat::trace(sum_a.data(), rows);

  // Second moment: same chain with each slice replaced by kron(slice, slice).
  const std::size_t r2 = r * r;
  std::vector<double> sq_a(r2 * r2), sq_b(r2 * r2), kron(r2 * r2), ksum(r2 * r2);
  auto mode_sq_sum = [&](std::size_t d, double* out) {
    const std::size_t rin = plain.bond_in(d), rout = plain.bond_out(d);
    const std::size_t n = rin * rin * rout * rout;
    std::fill(out, out + n, 0.0);
    for (std::size_t i = 0; i < plain.shape[d]; ++i) {
      smallmat::kron_self(plain.slice(d, i), kron.data(), rin, rout);
      for (std::size_t k = 0; k < n; ++k) out[k] += kron[k];
    }
  };
  const std::size_t rows2 = rows * rows;
  mode_sq_sum(0, sq_a.data());
  std::size_t cols2 = plain.bond_out(0) * plain.bond_out(0);
  for (std::size_t d = 1; d < d_count; ++d) {
    mode_sq_sum(d, ksum.data());
    const std::size_t next2 = plain.bond_out(d) * plain.bond_out(d);
    smallmat::mul(sq_a.data(), ksum.data(), sq_b.data(), rows2, cols2, next2);
    std::swap(sq_a, sq_b);
    cols2 = next2;
  }
  const double total_sq = smallmat::trace(sq_a.data(), rows2);

  double cells = 1.0;
  for (std::size_t e : plain.shape) cells *= static_cast<double>(e);
  const double mean = total_sum / cells;
  const double var = total_sq / cells - mean * mean;
  return {mean, var};
}

namespace {

// Rebuild a packed core buffer with one column appended to every slice.
void add_column(std::vector<double>& core, std::size_t n_slices, std::size_t rin,
                std::size_t rout, double sigma, Rng& rng) {
  std::vector<double> grown(n_slices * rin * (rout + 1));
  for (std::size_t i = 0; i < n_slices; ++i)
    for (std::size_t a = 0; a < rin; ++a) {
      const double* src = core.data() + (i * rin + a) * rout;
      double* dst = grown.data() + (i * rin + a) * (rout + 1);
      std::copy(src, src + rout, dst);
      dst[rout] = rng.normal(0.0, sigma);
    }
  core = std::move(grown);
}

void add_row(std::vector<double>& core, std::size_t n_slices, std::size_t rin,
             std::size_t rout, double sigma, Rng& rng) {
  std::vector<double> grown(n_slices * (rin + 1) * rout);
  for (std::size_t i = 0; i < n_slices; ++i) {
    const double* src = core.data() + i * rin * rout;
    double* dst = grown.data() + i * (rin + 1) * rout;
    std::copy(src, src + rin * rout, dst);
    for (std::size_t b = 0; b < rout; ++b) dst[rin * rout + b] = rng.normal(0.0, sigma);
  }
  core = std::move(grown);
}

void drop_column(std::vector<double>& core, std::size_t n_slices, std::size_t rin,
                 std::size_t rout, std::size_t col) {
  std::vector<double> shrunk(n_slices * rin * (rout - 1));
  for (std::size_t i = 0; i < n_slices; ++i)
    for (std::size_t a = 0; a < rin; ++a) {
      const double* src = core.data() + (i * rin + a) * rout;
      double* dst = shrunk.data() + (i * rin + a) * (rout - 1);
      std::copy(src, src + col, dst);
      std::copy(src + col + 1, src + rout, dst + col);
    }
  core = std::move(shrunk);
}

void drop_row(std::vector<double>& core, std::size_t n_slices, std::size_t rin,
              std::size_t rout, std::size_t row) {
  std::vector<double> shrunk(n_slices * (rin - 1) * rout);
  for (std::size_t i = 0; i < n_slices; ++i) {
    const double* src = core.data() + i * rin * rout;
    double* dst = shrunk.data() + i * (rin - 1) * rout;
    std::copy(src, src + row * rout, dst);
    std::copy(src + (row + 1) * rout, src + rin * rout, dst + row * rout);
  }
  core = std::move(shrunk);
}

}  // namespace

void grow_rank(TRModel& m, std::size_t mode, double core_sigma,
               double weight_sigma, Rng& rng) {
  const std::size_t d_count = m.order();
  if (mode >= d_count) throw InputError("mode out of range");
  const std::size_t next = (mode + 1) % d_count;
  const std::size_t rin_m = m.bond_in(mode), rout_m = m.bond_out(mode);

  add_column(m.cores[mode], m.shape[mode], rin_m, rout_m, core_sigma, rng);
  if (next == mode) {
    // Single-mode ring: the same core also gains the matching input row.
    add_row(m.cores[mode], m.shape[mode], rin_m, rout_m + 1, core_sigma, rng);
  } else {
    add_row(m.cores[next], m.shape[next], m.bond_in(next), m.bond_out(next),
            core_sigma, rng);
  }
  m.weights[mode].push_back(rng.normal(0.0, weight_sigma));
  m.ranks[mode] += 1;
}

void prune_rank(TRModel& m, std::size_t mode, std::size_t r) {
  const std::size_t d_count = m.order();
  if (mode >= d_count) throw InputError("mode out of range");
  if (r >= m.ranks[mode]) throw InputError("bond index out of range");
  if (m.ranks[mode] < 2) throw InputError("cannot prune below rank 1");
  const std::size_t next = (mode + 1) % d_count;
  const std::size_t rin_m = m.bond_in(mode), rout_m = m.bond_out(mode);

  drop_column(m.cores[mode], m.shape[mode], rin_m, rout_m, r);
  if (next == mode) {
    drop_row(m.cores[mode], m.shape[mode], rin_m, rout_m - 1, r);
  } else {
    drop_row(m.cores[next], m.shape[next], m.bond_in(next), m.bond_out(next), r);
  }
  m.weights[mode].erase(m.weights[mode].begin() + static_cast<std::ptrdiff_t>(r));
  m.ranks[mode] -= 1;
}

}  // namespace btr
