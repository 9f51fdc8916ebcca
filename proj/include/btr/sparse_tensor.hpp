#pragma once

#include <cstdint>
#include <vector>

#include "btr/common.hpp"

namespace btr {

/// Coordinate-format sparse tensor holding the observed entries.
///
/// Indices are 0-based internally (the text format is 1-based; the
/// readers and writers convert). Entries carry real values; for binary
/// data they must be exactly 0 or 1.
class SparseTensor {
 public:
  SparseTensor(std::vector<std::size_t> shape, DataKind kind);

  void reserve(std::size_t n) { indices_.reserve(n * order()); values_.reserve(n); }
  void add(const std::vector<std::size_t>& index, double value);

  std::size_t order() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  DataKind kind() const { return kind_; }

  /// Pointer to the order() indices of entry n.
  const std::uint32_t* index(std::size_t n) const { return indices_.data() + n * order(); }
  double value(std::size_t n) const { return values_[n]; }
  const std::vector<double>& values() const { return values_; }

  /// Number of cells in the full tensor.
  std::size_t dense_size() const;

  /// Check index bounds, duplicate entries, binary values in {0,1},
  /// and finiteness. Throws InputError on the first violation.
  void validate() const;

 private:
  std::vector<std::size_t> shape_;
  DataKind kind_;
  std::vector<std::uint32_t> indices_;  // flattened, order() per entry
  std::vector<double> values_;
};

}  // namespace btr
