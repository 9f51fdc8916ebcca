#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "btr/common.hpp"
#include "btr/rng.hpp"

namespace btr {

/// Tensor-ring factorization with per-bond diagonal weight vectors.
///
/// Bond d sits between core d and core (d+1) mod D, so core d holds slices
/// of shape bond_in(d) x bond_out(d) = ranks[d-1] x ranks[d]. Slices are
/// stored row-major and packed per mode: cores[d][ (i * bond_in + ri) *
/// bond_out + ro ]. weights[d] has ranks[d] entries and lives on bond d.
///
/// An entry of the represented tensor is the trace of the chain product of
/// weight-absorbed slices:
///   x[i1..iD] = tr( G1[i1] W1 G2[i2] W2 ... GD[iD] WD ),  Wd = diag(weights[d]).
struct TRModel {
  std::vector<std::size_t> shape;
  std::vector<std::size_t> ranks;
  std::vector<std::vector<double>> cores;
  std::vector<std::vector<double>> weights;

  std::size_t order() const { return shape.size(); }
  std::size_t bond_out(std::size_t d) const { return ranks[d]; }
  std::size_t bond_in(std::size_t d) const {
    return ranks[(d + order() - 1) % order()];
  }
  std::size_t slice_size(std::size_t d) const { return bond_in(d) * bond_out(d); }
  std::size_t max_rank() const;

  double* slice(std::size_t d, std::size_t i) {
    return cores[d].data() + i * slice_size(d);
  }
  const double* slice(std::size_t d, std::size_t i) const {
    return cores[d].data() + i * slice_size(d);
  }

  /// Shape/rank/buffer-size consistency; throws InputError on violation.
  void validate() const;

  /// Model with N(0, sigma^2) cores and unit weights, uniform rank.
  static TRModel random(const std::vector<std::size_t>& shape, std::size_t rank,
                        double sigma, Rng& rng);
};

/// Evaluate one entry; index is 0-based. Allocation-free variant below
/// takes two scratch buffers of at least max_rank()^2 doubles each.
double eval_entry(const TRModel& model, const std::uint32_t* index);
double eval_entry(const TRModel& model, const std::vector<std::size_t>& index);
double eval_entry_ws(const TRModel& model, const std::uint32_t* index,
                     double* buf_a, double* buf_b);

/// Model with the bond weights multiplied into the adjacent core columns
/// and reset to one. Represents the same tensor.
TRModel absorb_weights(const TRModel& model);

/// Chain product of weight-absorbed slices of every mode except d, in ring
/// order d+1, d+2, ..., d-1. Shape bond_out(d) x bond_in(d), row-major.
std::vector<double> subchain_slice(const TRModel& model, std::size_t mode,
                                   const std::vector<std::size_t>& index);

/// Full tensor in row-major order. Throws CapacityError when the dense
/// size exceeds max_cells.
std::vector<double> reconstruct_dense(const TRModel& model,
                                      std::size_t max_cells = 100000000);

/// Exact mean and population variance of all dense entries, computed from
/// chain products of per-mode slice sums (no dense materialization).
std::pair<double, double> tr_mean_var(const TRModel& model);

/// Append one bond index at bond `mode`: core `mode` gains an output
/// column and core (mode+1)%D an input row, filled with N(0, core_sigma^2)
/// draws; the new bond weight is N(0, weight_sigma^2). Draw order is fixed
/// so a seeded Rng gives reproducible growth.
void grow_rank(TRModel& model, std::size_t mode, double core_sigma,
               double weight_sigma, Rng& rng);

/// Remove bond index r at bond `mode` (the matching core column, core row
/// and weight entry). Refuses to drop below rank 1.
void prune_rank(TRModel& model, std::size_t mode, std::size_t r);

}  // namespace btr
