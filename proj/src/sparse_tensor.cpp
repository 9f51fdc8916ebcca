#include "btr/sparse_tensor.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

namespace btr {

SparseTensor::SparseTensor(std::vector<std::size_t> shape, DataKind kind)
    : shape_(std::move(shape)), kind_(kind) {
  if (shape_.empty()) throw InputError("tensor must have at least one mode");
  for (std::size_t d = 0; d < shape_.size(); ++d) {
    if (shape_[d] == 0)
      throw InputError("mode " + std::to_string(d + 1) + " has zero extent");
    if (shape_[d] > std::numeric_limits<std::uint32_t>::max())
      throw InputError("mode extents above 2^32 are not supported");
  }
  // Keep the linear index representable so duplicate detection stays exact.
  std::size_t total = 1;
  for (std::size_t e : shape_) {
    if (total > (std::numeric_limits<std::size_t>::max() / 2) / e)
      throw InputError("tensor has more than 2^63 cells");
    total *= e;
  }
}

void SparseTensor::add(const std::vector<std::size_t>& index, double value) {
  if (index.size() != order())
    throw InputError("entry index has wrong number of modes");
  for (std::size_t d = 0; d < order(); ++d) {
    if (index[d] >= shape_[d])
      throw InputError("index out of bounds in mode " + std::to_string(d + 1));
    indices_.push_back(static_cast<std::uint32_t>(index[d]));
  }
  values_.push_back(value);
}

std::size_t SparseTensor::dense_size() const {
  std::size_t total = 1;
  for (std::size_t e : shape_) total *= e;
  return total;
}

void SparseTensor::validate() const {
  std::unordered_set<std::size_t> seen;
  seen.reserve(size() * 2);
  for (std::size_t n = 0; n < size(); ++n) {
    const std::uint32_t* idx = index(n);
    std::size_t linear = 0;
    for (std::size_t d = 0; d < order(); ++d) {
      if (idx[d] >= shape_[d])
        throw InputError("entry " + std::to_string(n + 1) +
                         ": index out of bounds in mode " + std::to_string(d + 1));
      linear = linear * shape_[d] + idx[d];
    }
    if (!seen.insert(linear).second)
      throw InputError("entry " + std::to_string(n + 1) + " duplicates an earlier index");
    const double v = values_[n];
    if (!std::isfinite(v))
      throw InputError("entry " + std::to_string(n + 1) + " has non-finite value");
    if (kind_ == DataKind::binary && v != 0.0 && v != 1.0)
      throw InputError("entry " + std::to_string(n + 1) +
                       " is not 0/1 in a binary tensor");
  }
}

}  // namespace btr
