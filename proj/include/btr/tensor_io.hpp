#pragma once

#include <iosfwd>
#include <string>

#include "btr/sparse_tensor.hpp"

namespace btr {

/// Text format for observed entries, 1-based indices:
///
///   shape I1 I2 ... ID
///   kind continuous|binary
///   i1 i2 ... iD value
///   ...
///
/// Readers throw ParseError with the offending line number; the loaded
/// tensor is validated (bounds, duplicates, binary values in {0,1}).
SparseTensor read_sparse(std::istream& in);
SparseTensor read_sparse(const std::string& path);

void write_sparse(const SparseTensor& t, std::ostream& out);
void write_sparse(const SparseTensor& t, const std::string& path);

}  // namespace btr
