#pragma once

// OpenMP-parallel inner loops shared by the samplers. Serial reference
// versions with the same contracts live in reference.hpp; the unit tests
// compare the two and bench/ times them against each other.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "btr/common.hpp"
#include "btr/sparse_tensor.hpp"
#include "btr/tr_model.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace btr::kernels {

/// Observation order grouped by one mode's index: perm lists observation
/// ids so that the block [offsets[i], offsets[i+1]) holds exactly the
/// observations with index i in that mode. Grouping is stable.
struct ModeOrdering {
  std::vector<std::uint32_t> perm;
  std::vector<std::size_t> offsets;
};

ModeOrdering build_mode_ordering(const SparseTensor& data, std::size_t mode);

/// Subchain matrices for every observation at one mode, packed as
/// out[n * stride ...] with stride = bond_out(mode) * bond_in(mode).
void subchains_at_mode(const TRModel& model, const SparseTensor& data,
                       std::size_t mode, double* out, const ExecPolicy& pol);

/// Model value at every observed index.
void eval_all(const TRModel& model, const SparseTensor& data, double* out,
              const ExecPolicy& pol);

/// diag(S_n * G[i_n]) for every observation: out[n * rank + r]. sub must
/// hold the matrices produced by subchains_at_mode for the same mode.
void diag_products(const TRModel& model, const SparseTensor& data,
                   std::size_t mode, const double* sub, double* out,
                   const ExecPolicy& pol);

/// Parallel loop with static schedule; f(i) must be independent across i.
template <class F>
void parallel_for(std::size_t n, const ExecPolicy& pol, F&& f) {
#ifdef _OPENMP
  const int t = pol.resolved_threads();
  if (t > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(t)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
      f(static_cast<std::size_t>(i));
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) f(i);
}

/// Ordered chunked reduction. Each chunk accumulates serially into a copy
/// of init via fold(i, acc); chunk results then combine left to right with
/// +=, so the floating-point summation order is fixed by the chunk size
/// alone. Deterministic policies pin the chunk size, making the result
/// independent of the thread count; otherwise chunks scale with the thread
/// count and results are reproducible only for a fixed count.
template <class T, class F>
T reduce_ordered(std::size_t n, T init, const ExecPolicy& pol, F&& fold) {
  std::size_t grain;
  if (pol.deterministic) {
    grain = 4096;
  } else {
    const std::size_t t = static_cast<std::size_t>(pol.resolved_threads());
    grain = std::max<std::size_t>(1024, (n + 8 * t - 1) / (8 * t));
  }
  const std::size_t n_chunks = n == 0 ? 0 : (n + grain - 1) / grain;
  if (n_chunks <= 1) {
    T acc = init;
    for (std::size_t i = 0; i < n; ++i) fold(i, acc);
    return acc;
  }
  std::vector<T> parts(n_chunks, init);
  parallel_for(n_chunks, pol, [&](std::size_t c) {
    T acc = init;
    const std::size_t lo = c * grain;
    const std::size_t hi = std::min(lo + grain, n);
    for (std::size_t i = lo; i < hi; ++i) fold(i, acc);
    parts[c] = acc;
  });
  T total = init;
  for (std::size_t c = 0; c < n_chunks; ++c) total += parts[c];
  return total;
}

}  // namespace btr::kernels
