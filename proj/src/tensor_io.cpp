#include "btr/tensor_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

namespace btr {
namespace {

std::vector<std::string> tokens_of(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> toks;
  std::string t;
  while (is >> t) toks.push_back(t);
  return toks;
}

std::size_t parse_extent(const std::string& tok, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(tok, &pos);
    if (pos != tok.size() || v <= 0) throw std::invalid_argument("");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ParseError("'" + tok + "' is not a positive integer", line_no);
  }
}

double parse_value(const std::string& tok, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ParseError("'" + tok + "' is not a number", line_no);
  }
}

}  // namespace

SparseTensor read_sparse(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_content_line = [&](std::vector<std::string>& toks) -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      toks = tokens_of(line);
      if (!toks.empty()) return true;
    }
    return false;
  };

  std::vector<std::string> toks;
  if (!next_content_line(toks) || toks[0] != "shape" || toks.size() < 2)
    throw ParseError("expected 'shape I1 ... ID'", line_no == 0 ? 1 : line_no);
  std::vector<std::size_t> shape;
  for (std::size_t k = 1; k < toks.size(); ++k)
    shape.push_back(parse_extent(toks[k], line_no));

  if (!next_content_line(toks) || toks[0] != "kind" || toks.size() != 2)
    throw ParseError("expected 'kind continuous|binary'", line_no);
  DataKind kind;
  try {
    kind = data_kind_from_string(toks[1]);
  } catch (const InputError& e) {
    throw ParseError(e.what(), line_no);
  }

  SparseTensor t(shape, kind);
  std::vector<std::size_t> idx(shape.size());
  std::unordered_set<std::size_t> seen;
  while (next_content_line(toks)) {
    if (toks.size() != shape.size() + 1)
      throw ParseError("expected " + std::to_string(shape.size()) +
                           " indices and one value",
                       line_no);
    std::size_t flat = 0;
    for (std::size_t d = 0; d < shape.size(); ++d) {
      const std::size_t one_based = parse_extent(toks[d], line_no);
      if (one_based > shape[d])
        throw ParseError("index " + std::to_string(one_based) +
                             " exceeds extent of mode " + std::to_string(d + 1),
                         line_no);
      idx[d] = one_based - 1;
      flat = flat * shape[d] + idx[d];
    }
    if (!seen.insert(flat).second)
      throw ParseError("duplicate index", line_no);
    const double v = parse_value(toks.back(), line_no);
    if (kind == DataKind::binary && v != 0.0 && v != 1.0)
      throw ParseError("binary entries must be 0 or 1", line_no);
    t.add(idx, v);
  }
  t.validate();
  return t;
}

SparseTensor read_sparse(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  return read_sparse(in);
}

void write_sparse(const SparseTensor& t, std::ostream& out) {
  out << "shape";
  for (std::size_t e : t.shape()) out << ' ' << e;
  out << "\nkind " << to_string(t.kind()) << '\n';
  out << std::setprecision(17);
  for (std::size_t n = 0; n < t.size(); ++n) {
    const std::uint32_t* idx = t.index(n);
    for (std::size_t d = 0; d < t.order(); ++d) out << idx[d] + 1 << ' ';
    out << t.value(n) << '\n';
  }
}

void write_sparse(const SparseTensor& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  write_sparse(t, out);
  if (!out) throw InputError("write to '" + path + "' failed");
}

}  // namespace btr
