#pragma once

// Serial reference implementations of the parallel kernels. These go
// through the public per-entry API one observation at a time, trading
// speed for obviousness; tests compare the fast paths against them and
// bench/ measures the gap.

#include "btr/sparse_tensor.hpp"
#include "btr/tr_model.hpp"

namespace btr::reference {

void subchains_at_mode(const TRModel& model, const SparseTensor& data,
                       std::size_t mode, double* out);

void eval_all(const TRModel& model, const SparseTensor& data, double* out);

void diag_products(const TRModel& model, const SparseTensor& data,
                   std::size_t mode, const double* sub, double* out);

}  // namespace btr::reference
