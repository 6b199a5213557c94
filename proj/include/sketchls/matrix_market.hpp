#pragma once

// Matrix Market exchange format.
//
// Writers emit `array real general` for dense matrices and vectors (entries in
// column-major order, as the format prescribes) and `coordinate real general`
// for sparse matrices (1-based indices, row-major entry order). Values use the
// shortest round-trip decimal form, so write -> read is bit-exact.
//
// Readers accept array and coordinate layouts with real, integer or pattern
// fields and general, symmetric or skew-symmetric storage.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sketchls/errors.hpp"
#include "sketchls/format.hpp"
#include "sketchls/linalg.hpp"

namespace sketchls::mm {

enum class Layout { array, coordinate };
enum class Field { real, integer, pattern };
enum class Symmetry { general, symmetric, skew_symmetric };

struct Header {
  Layout layout = Layout::array;
  Field field = Field::real;
  Symmetry symmetry = Symmetry::general;
};

// ---------------------------------------------------------------------------
// Writing

inline void write(std::ostream& os, const DenseMatrix& a) {
  os << "%%MatrixMarket matrix array real general\n";
  os << a.rows() << ' ' << a.cols() << '\n';
  const auto& m = a.eigen();
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) os << fmt::shortest(m(i, j)) << '\n';
  }
}

inline void write(std::ostream& os, const Vector& v) {
  os << "%%MatrixMarket matrix array real general\n";
  os << v.size() << " 1\n";
  for (double x : v.span()) os << fmt::shortest(x) << '\n';
}

inline void write(std::ostream& os, const SparseMatrix& a) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto va = a.values();
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index k = rp[i]; k < rp[i + 1]; ++k) {
      os << (i + 1) << ' ' << (ci[k] + 1) << ' ' << fmt::shortest(va[k]) << '\n';
    }
  }
}

template <class T>
void write_file(const std::filesystem::path& path, const T& value) {
  std::ofstream os(path);
  if (!os) throw FileError("cannot open for writing", path.string());
  write(os, value);
  os.flush();
  if (!os) throw FileError("write failed", path.string());
}

// ---------------------------------------------------------------------------
// Reading

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

class Tokenizer {
 public:
  Tokenizer(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  /// Next line (without the newline); false at end of input.
  bool line(std::string_view& out) {
    if (pos_ >= text_.size()) return false;
    const auto end = text_.find('\n', pos_);
    const auto stop = end == std::string_view::npos ? text_.size() : end;
    out = text_.substr(pos_, stop - pos_);
    if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
    pos_ = stop + 1;
    ++line_no_;
    return true;
  }

  /// Next whitespace-separated token, skipping comment lines.
  std::string_view token() {
    while (true) {
      while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        if (text_[pos_] == '\n') ++line_no_;
        ++pos_;
      }
      if (pos_ >= text_.size()) fail("unexpected end of file");
      if (text_[pos_] == '%') {
        const auto end = text_.find('\n', pos_);
        pos_ = end == std::string_view::npos ? text_.size() : end;
        continue;
      }
      const auto start = pos_;
      while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      return text_.substr(start, pos_ - start);
    }
  }

  bool has_more_tokens() {
    auto save = pos_;
    auto save_line = line_no_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '%') {
        const auto end = text_.find('\n', pos_);
        pos_ = end == std::string_view::npos ? text_.size() : end;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        pos_ = save;
        line_no_ = save_line;
        return true;
      }
    }
    pos_ = save;
    line_no_ = save_line;
    return false;
  }

  double real() {
    const auto t = token();
    const auto v = fmt::parse_double(t);
    if (!v) fail("invalid number '" + std::string(t) + "'");
    return *v;
  }

  Index count() {
    const auto t = token();
    const auto v = fmt::parse_int<long long>(t);
    if (!v || *v < 0) fail("invalid count '" + std::string(t) + "'");
    return static_cast<Index>(*v);
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("Matrix Market: " + what + " near line " + std::to_string(line_no_ + 1), source_);
  }

 private:
  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

inline Header parse_header(Tokenizer& tok) {
  std::string_view first;
  if (!tok.line(first)) tok.fail("empty file");
  std::istringstream is{std::string(first)};
  std::string banner, object, layout, field, symmetry;
  is >> banner >> object >> layout >> field >> symmetry;
  if (banner != "%%MatrixMarket") tok.fail("missing %%MatrixMarket banner");
  if (lower(object) != "matrix") tok.fail("unsupported object '" + object + "'");
  Header h;
  const auto l = lower(layout);
  if (l == "array") {
    h.layout = Layout::array;
  } else if (l == "coordinate") {
    h.layout = Layout::coordinate;
  } else {
    tok.fail("unsupported layout '" + layout + "'");
  }
  const auto f = lower(field);
  if (f == "real" || f == "double") {
    h.field = Field::real;
  } else if (f == "integer") {
    h.field = Field::integer;
  } else if (f == "pattern") {
    h.field = Field::pattern;
  } else {
    tok.fail("unsupported field '" + field + "'");
  }
  const auto s = lower(symmetry);
  if (s == "general") {
    h.symmetry = Symmetry::general;
  } else if (s == "symmetric") {
    h.symmetry = Symmetry::symmetric;
  } else if (s == "skew-symmetric") {
    h.symmetry = Symmetry::skew_symmetric;
  } else {
    tok.fail("unsupported symmetry '" + symmetry + "'");
  }
  if (h.layout == Layout::array && h.field == Field::pattern) tok.fail("pattern field requires coordinate layout");
  return h;
}

inline Eigen::MatrixXd read_array(Tokenizer& tok, const Header& h) {
  const Index rows = tok.count();
  const Index cols = tok.count();
  if (rows < 1 || cols < 1) tok.fail("dimensions must be positive");
  if (h.symmetry != Symmetry::general && rows != cols) tok.fail("symmetric storage needs a square matrix");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    const Index first = h.symmetry == Symmetry::general ? 0 : (h.symmetry == Symmetry::symmetric ? j : j + 1);
    for (Index i = first; i < rows; ++i) {
      m(i, j) = tok.real();
      if (h.symmetry == Symmetry::symmetric) m(j, i) = m(i, j);
      if (h.symmetry == Symmetry::skew_symmetric) m(j, i) = -m(i, j);
    }
  }
  if (tok.has_more_tokens()) tok.fail("trailing data after " + std::to_string(rows * cols) + " entries");
  return m;
}

struct Coordinate {
  Index rows = 0;
  Index cols = 0;
  std::vector<Triplet> entries;
};

inline Coordinate read_coordinate(Tokenizer& tok, const Header& h) {
  Coordinate c;
  c.rows = tok.count();
  c.cols = tok.count();
  const Index nnz = tok.count();
  if (c.rows < 1 || c.cols < 1) tok.fail("dimensions must be positive");
  c.entries.reserve(static_cast<std::size_t>(nnz) * (h.symmetry == Symmetry::general ? 1 : 2));
  for (Index k = 0; k < nnz; ++k) {
    const Index i = tok.count() - 1;
    const Index j = tok.count() - 1;
    if (i < 0 || i >= c.rows || j < 0 || j >= c.cols) tok.fail("entry index out of range");
    const double v = h.field == Field::pattern ? 1.0 : tok.real();
    c.entries.push_back({i, j, v});
    if (h.symmetry != Symmetry::general && i != j) {
      c.entries.push_back({j, i, h.symmetry == Symmetry::symmetric ? v : -v});
    }
  }
  if (tok.has_more_tokens()) tok.fail("trailing data after " + std::to_string(nnz) + " entries");
  return c;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FileError("cannot open for reading", path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace detail

using AnyMatrix = std::variant<DenseMatrix, SparseMatrix>;

/// Parses Matrix Market text. Array layout yields a DenseMatrix, coordinate
/// layout a SparseMatrix.
inline AnyMatrix parse(std::string_view text, const std::string& source = "<memory>") {
  detail::Tokenizer tok(text, source);
  const auto h = detail::parse_header(tok);
  try {
    if (h.layout == Layout::array) return DenseMatrix(detail::read_array(tok, h));
    auto c = detail::read_coordinate(tok, h);
    return SparseMatrix::from_triplets(c.rows, c.cols, std::move(c.entries));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string("Matrix Market: ") + e.what(), source);
  }
}

inline AnyMatrix read(const std::filesystem::path& path) {
  return parse(detail::slurp(path), path.string());
}

inline DenseMatrix to_dense(AnyMatrix any) {
  if (auto* d = std::get_if<DenseMatrix>(&any)) return std::move(*d);
  return std::get<SparseMatrix>(any).to_dense();
}

inline DenseMatrix read_dense(const std::filesystem::path& path) { return to_dense(read(path)); }

inline SparseMatrix read_sparse(const std::filesystem::path& path) {
  auto any = read(path);
  if (auto* s = std::get_if<SparseMatrix>(&any)) return std::move(*s);
  return SparseMatrix::from_dense(std::get<DenseMatrix>(any));
}

/// Accepts an n x 1 or 1 x n matrix in either layout.
inline Vector parse_vector(std::string_view text, const std::string& source = "<memory>") {
  const auto m = to_dense(parse(text, source));
  if (m.cols() != 1 && m.rows() != 1) {
    throw ParseError("Matrix Market: expected a vector, got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()),
                     source);
  }
  const auto& e = m.eigen();
  return Vector(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(e.data(), e.size())));
}

inline Vector read_vector(const std::filesystem::path& path) {
  return parse_vector(detail::slurp(path), path.string());
}

}  // namespace sketchls::mm
