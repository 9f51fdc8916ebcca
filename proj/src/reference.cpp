#include "btr/reference.hpp"

#include <algorithm>
#include <vector>

namespace btr::reference {

void subchains_at_mode(const TRModel& model, const SparseTensor& data,
                       std::size_t mode, double* out) {
  const std::size_t stride = model.bond_out(mode) * model.bond_in(mode);
  std::vector<std::size_t> idx(model.order());
  for (std::size_t n = 0; n < data.size(); ++n) {
    for (std::size_t d = 0; d < model.order(); ++d) idx[d] = data.index(n)[d];
    const std::vector<double> s = subchain_slice(model, mode, idx);
    std::copy(s.begin(), s.end(), out + n * stride);
  }
}

void eval_all(const TRModel& model, const SparseTensor& data, double* out) {
  for (std::size_t n = 0; n < data.size(); ++n)
    out[n] = eval_entry(model, data.index(n));
}

void diag_products(const TRModel& model, const SparseTensor& data,
                   std::size_t mode, const double* sub, double* out) {
  const std::size_t rout = model.bond_out(mode);
  const std::size_t rin = model.bond_in(mode);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const double* s = sub + n * rout * rin;
    const double* g = model.slice(mode, data.index(n)[mode]);
    for (std::size_t r = 0; r < rout; ++r) {
      double acc = 0.0;
      for (std::size_t k = 0; k < rin; ++k) acc += s[r * rin + k] * g[k * rout + r];
      out[n * rout + r] = acc;
    }
  }
}

}  // namespace btr::reference
