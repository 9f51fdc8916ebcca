#include "btr/kernels.hpp"

#include "btr/smallmat.hpp"

namespace btr::kernels {

ModeOrdering build_mode_ordering(const SparseTensor& data, std::size_t mode) {
  if (mode >= data.order()) throw InputError("mode out of range");
  const std::size_t extent = data.shape()[mode];
  ModeOrdering ord;
  ord.offsets.assign(extent + 1, 0);
  for (std::size_t n = 0; n < data.size(); ++n)
    ord.offsets[data.index(n)[mode] + 1] += 1;
  for (std::size_t i = 0; i < extent; ++i) ord.offsets[i + 1] += ord.offsets[i];
  ord.perm.resize(data.size());
  std::vector<std::size_t> cursor(ord.offsets.begin(), ord.offsets.end() - 1);
  for (std::size_t n = 0; n < data.size(); ++n)
    ord.perm[cursor[data.index(n)[mode]]++] = static_cast<std::uint32_t>(n);
  return ord;
}

namespace {

// Walk the ring from `mode`+1 around to `mode`-1 for one observation,
// multiplying pre-absorbed slices. buf_a/buf_b are max_rank^2 scratch.
void subchain_into(const TRModel& plain, std::size_t mode,
                   const std::uint32_t* idx, double* out, double* buf_a,
                   double* buf_b) {
  const std::size_t d_count = plain.order();
  const std::size_t rows = plain.bond_out(mode);
  if (d_count == 1) {
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < rows; ++j) out[i * rows + j] = (i == j) ? 1.0 : 0.0;
    return;
  }
  std::size_t k = (mode + 1) % d_count;
  const double* cur = plain.slice(k, idx[k]);
  std::size_t cols = plain.bond_out(k);
  double* a = buf_a;
  double* b = buf_b;
  for (std::size_t j = 2; j < d_count; ++j) {
    k = (mode + j) % d_count;
    const std::size_t next_cols = plain.bond_out(k);
    double* dst = (j == d_count - 1) ? out : a;
    smallmat::mul(cur, plain.slice(k, idx[k]), dst, rows, cols, next_cols);
    cur = dst;
    std::swap(a, b);
    cols = next_cols;
  }
  if (cur != out) std::copy(cur, cur + rows * cols, out);
}

}  // namespace

void subchains_at_mode(const TRModel& model, const SparseTensor& data,
                       std::size_t mode, double* out, const ExecPolicy& pol) {
  const TRModel plain = absorb_weights(model);
  const std::size_t stride = plain.bond_out(mode) * plain.bond_in(mode);
  const std::size_t r2 = plain.max_rank() * plain.max_rank();
  const std::size_t n = data.size();
#ifdef _OPENMP
  const int t = pol.resolved_threads();
#pragma omp parallel num_threads(t) if (t > 1 && n > 1)
  {
    std::vector<double> buf_a(r2), buf_b(r2);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
      subchain_into(plain, mode, data.index(static_cast<std::size_t>(i)),
                    out + static_cast<std::size_t>(i) * stride, buf_a.data(),
                    buf_b.data());
  }
#else
  (void)pol;
  std::vector<double> buf_a(r2), buf_b(r2);
  for (std::size_t i = 0; i < n; ++i)
    subchain_into(plain, mode, data.index(i), out + i * stride, buf_a.data(),
                  buf_b.data());
#endif
}

void eval_all(const TRModel& model, const SparseTensor& data, double* out,
              const ExecPolicy& pol) {
  const std::size_t r2 = model.max_rank() * model.max_rank();
  const std::size_t n = data.size();
#ifdef _OPENMP
  const int t = pol.resolved_threads();
#pragma omp parallel num_threads(t) if (t > 1 && n > 1)
  {
    std::vector<double> buf_a(r2), buf_b(r2);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
      out[i] = eval_entry_ws(model, data.index(static_cast<std::size_t>(i)),
                             buf_a.data(), buf_b.data());
  }
#else
  (void)pol;
  std::vector<double> buf_a(r2), buf_b(r2);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = eval_entry_ws(model, data.index(i), buf_a.data(), buf_b.data());
#endif
}

void diag_products(const TRModel& model, const SparseTensor& data,
                   std::size_t mode, const double* sub, double* out,
                   const ExecPolicy& pol) {
  const std::size_t rout = model.bond_out(mode);
  const std::size_t rin = model.bond_in(mode);
  const std::size_t stride = rout * rin;
  parallel_for(data.size(), pol, [&](std::size_t n) {
    const double* s = sub + n * stride;
    const double* g = model.slice(mode, data.index(n)[mode]);
    double* m = out + n * rout;
    for (std::size_t r = 0; r < rout; ++r) {
      double acc = 0.0;
      const double* srow = s + r * rin;
      for (std::size_t k = 0; k < rin; ++k) acc += srow[k] * g[k * rout + r];
      m[r] = acc;
    }
  });
}

}  // namespace btr::kernels
