#include "btr/common.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace btr {

std::string to_string(DataKind kind) {
  return kind == DataKind::continuous ? "continuous" : "binary";
}

DataKind data_kind_from_string(const std::string& s) {
  if (s == "continuous") return DataKind::continuous;
  if (s == "binary") return DataKind::binary;
  throw InputError("unknown data kind '" + s + "' (expected continuous or binary)");
}

std::string version_string() {
#ifdef BTR_VERSION_STRING
  return BTR_VERSION_STRING;
#else
  return "unknown";
#endif
}

int ExecPolicy::resolved_threads() const {
#ifdef _OPENMP
  return threads > 0 ? threads : omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace btr
