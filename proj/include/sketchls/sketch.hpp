#pragma once

// Sketching operators S (d x m) for tall problems.
//
//   gaussian     iid Normal(0, 1/d) entries, regenerated block by block from
//                the counter-based stream instead of being stored.
//   srht         sqrt(m_pad/d) * P * H_norm * D. m is zero-padded to the next
//                power of two m_pad, D is a random +-1 diagonal, H_norm the
//                1/sqrt(m_pad)-scaled Sylvester Hadamard matrix applied with
//                the fast Walsh-Hadamard transform, and P keeps d distinct
//                rows drawn without replacement (partial Fisher-Yates over
//                [0, m_pad)).
//   countsketch  Clarkson-Woodruff: source column j goes to one hashed target
//                row with a random sign. The default kind.
//   sparsesign   s distinct target rows per source column, entries +-1/sqrt(s).
//                This is the per-column (short-axis) construction; the
//                row-sparse variant is not provided.
//   identity     S = I_m, for testing.
//
// Sparse operators keep only their hash and sign tables; nothing on the apply
// path materializes S.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sketchls/errors.hpp"
#include "sketchls/linalg.hpp"
#include "sketchls/rng.hpp"

namespace sketchls {

enum class SketchKind { gaussian, srht, countsketch, sparsesign, identity };

inline constexpr SketchKind kDefaultSketch = SketchKind::countsketch;
inline constexpr Index kDefaultSparsity = 8;

inline std::string_view to_string(SketchKind k) {
  switch (k) {
    case SketchKind::gaussian: return "gaussian";
    case SketchKind::srht: return "srht";
    case SketchKind::countsketch: return "countsketch";
    case SketchKind::sparsesign: return "sparsesign";
    case SketchKind::identity: return "identity";
  }
  return "unknown";
}

inline SketchKind parse_sketch_kind(std::string_view s) {
  for (auto k : {SketchKind::gaussian, SketchKind::srht, SketchKind::countsketch, SketchKind::sparsesign,
                 SketchKind::identity}) {
    if (s == to_string(k)) return k;
  }
  throw SpecError("unknown sketch kind '" + std::string(s) + "'");
}

struct SketchSpec {
  SketchKind kind = kDefaultSketch;
  /// Target dimension d. Left empty, solvers derive it from their d_factor.
  std::optional<Index> embed_dim;
  std::uint64_t seed = 0;
  /// Nonzeros per column; sparsesign only.
  Index sparsity = kDefaultSparsity;
};

/// d = clamp(ceil(d_factor * n), n, m) unless embed_dim is set. Identity always
/// uses d = m.
inline Index resolve_embed_dim(const SketchSpec& spec, Index m, Index n, double d_factor) {
  if (spec.kind == SketchKind::identity) return m;
  if (spec.embed_dim) return *spec.embed_dim;
  const auto d = static_cast<Index>(std::ceil(d_factor * static_cast<double>(n)));
  return std::clamp(d, n, m);
}

namespace sketch_state {

struct Identity {};

struct Gaussian {
  std::uint64_t key;
  double scale;
};

struct CountSketch {
  std::vector<Index> rows;
  std::vector<double> signs;
};

struct SparseSign {
  Index per_column;
  std::vector<Index> rows;     // m * per_column, sorted within each column
  std::vector<double> values;  // +-1/sqrt(per_column)
};

struct Srht {
  Index padded;
  std::vector<double> signs;   // D, length m
  std::vector<Index> sampled;  // P, d distinct rows of [0, padded)
  double scale;
};

}  // namespace sketch_state

class SketchOperator {
 public:
  using State = std::variant<sketch_state::Identity, sketch_state::Gaussian, sketch_state::CountSketch,
                             sketch_state::SparseSign, sketch_state::Srht>;

  SketchOperator(SketchKind kind, Index source_dim, Index target_dim, State state)
      : kind_(kind), source_dim_(source_dim), target_dim_(target_dim), state_(std::move(state)) {}

  SketchKind kind() const noexcept { return kind_; }
  Index source_dim() const noexcept { return source_dim_; }
  Index target_dim() const noexcept { return target_dim_; }
  const State& state() const noexcept { return state_; }

 private:
  SketchKind kind_;
  Index source_dim_;
  Index target_dim_;
  State state_;
};

// ---------------------------------------------------------------------------
// Fast Walsh-Hadamard transform

/// x <- H x for the unnormalized Sylvester-ordered Hadamard matrix.
inline void fwht_inplace(std::span<double> x) {
  const std::size_t n = x.size();
  if (n == 0 || !std::has_single_bit(n)) {
    throw ShapeError("fwht needs a power-of-two length, got " + std::to_string(n));
  }
  for (std::size_t h = 1; h < n; h *= 2) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = x[j];
        const double b = x[j + h];
        x[j] = a + b;
        x[j + h] = a - b;
      }
    }
  }
}

inline Vector fwht(const Vector& x) {
  Eigen::VectorXd y = x.eigen();
  fwht_inplace({y.data(), static_cast<std::size_t>(y.size())});
  return Vector(std::move(y));
}

// ---------------------------------------------------------------------------
// Construction

namespace detail {

inline std::uint64_t kind_tag(SketchKind k) { return static_cast<std::uint64_t>(k) + 0x5eed; }

}  // namespace detail

inline SketchOperator build_sketch(const SketchSpec& spec, Index m) {
  using namespace sketch_state;
  if (m < 1) throw SpecError("sketch source dimension must be positive");
  if (spec.kind == SketchKind::identity) return SketchOperator(spec.kind, m, m, Identity{});

  if (!spec.embed_dim) throw SpecError("sketch embedding dimension is not set");
  const Index d = *spec.embed_dim;
  if (d < 1) throw SpecError("sketch embedding dimension must be positive, got " + std::to_string(d));
  if (d > m) {
    throw SpecError("sketch embedding dimension " + std::to_string(d) + " exceeds source dimension " +
                    std::to_string(m));
  }
  const std::uint64_t key = rng::derive_key(spec.seed, detail::kind_tag(spec.kind));
  rng::CounterStream stream(key);
  const auto du = static_cast<std::uint64_t>(d);

  switch (spec.kind) {
    case SketchKind::gaussian:
      return SketchOperator(spec.kind, m, d, Gaussian{key, 1.0 / std::sqrt(static_cast<double>(d))});

    case SketchKind::countsketch: {
      CountSketch st;
      st.rows.resize(static_cast<std::size_t>(m));
      st.signs.resize(static_cast<std::size_t>(m));
      for (std::size_t j = 0; j < st.rows.size(); ++j) {
        st.rows[j] = static_cast<Index>(stream.below(du));
        st.signs[j] = stream.sign();
      }
      return SketchOperator(spec.kind, m, d, std::move(st));
    }

    case SketchKind::sparsesign: {
      const Index s = spec.sparsity;
      if (s < 1 || s > d) {
        throw SpecError("sparsesign needs 1 <= s <= d, got s=" + std::to_string(s) + ", d=" + std::to_string(d));
      }
      SparseSign st{s, {}, {}};
      st.rows.resize(static_cast<std::size_t>(m * s));
      st.values.resize(static_cast<std::size_t>(m * s));
      const double mag = 1.0 / std::sqrt(static_cast<double>(s));
      for (Index j = 0; j < m; ++j) {
        const auto col = std::span<Index>(st.rows).subspan(static_cast<std::size_t>(j * s), static_cast<std::size_t>(s));
        Index filled = 0;
        while (filled < s) {
          const auto r = static_cast<Index>(stream.below(du));
          if (std::find(col.begin(), col.begin() + filled, r) == col.begin() + filled) col[filled++] = r;
        }
        std::sort(col.begin(), col.end());
        for (Index t = 0; t < s; ++t) st.values[static_cast<std::size_t>(j * s + t)] = mag * stream.sign();
      }
      return SketchOperator(spec.kind, m, d, std::move(st));
    }

    case SketchKind::srht: {
      Srht st;
      st.padded = static_cast<Index>(std::bit_ceil(static_cast<std::uint64_t>(m)));
      st.signs.resize(static_cast<std::size_t>(m));
      for (auto& s : st.signs) s = stream.sign();
      std::vector<Index> perm(static_cast<std::size_t>(st.padded));
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<Index>(i);
      for (Index i = 0; i < d; ++i) {
        const auto j = i + static_cast<Index>(stream.below(static_cast<std::uint64_t>(st.padded - i)));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
      }
      st.sampled.assign(perm.begin(), perm.begin() + d);
      // sqrt(m_pad / d) * (1 / sqrt(m_pad)) folded into one factor.
      st.scale = 1.0 / std::sqrt(static_cast<double>(d));
      return SketchOperator(spec.kind, m, d, std::move(st));
    }

    case SketchKind::identity:
      break;
  }
  throw SpecError("unhandled sketch kind");
}

// ---------------------------------------------------------------------------
// Application

namespace detail {

using ConstDenseRef = Eigen::Ref<const Eigen::MatrixXd>;

/// Columns [first, first + out.cols()) of a Gaussian sketch.
inline void gaussian_columns(const sketch_state::Gaussian& g, Index d, Index first, Eigen::MatrixXd& out) {
  rng::fill_normal(g.key, static_cast<std::uint64_t>(first * d),
                   {out.data(), static_cast<std::size_t>(out.size())});
  out *= g.scale;
}

inline Eigen::MatrixXd apply_dense(const SketchOperator& op, const ConstDenseRef& a) {
  using namespace sketch_state;
  const Index m = op.source_dim();
  const Index d = op.target_dim();
  const Index n = a.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, n);

  std::visit(
      [&](const auto& st) {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, Identity>) {
          out = a;
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          const Index block = std::max<Index>(1, Index{1 << 18} / d);
          Eigen::MatrixXd s_block(d, block);
          for (Index j0 = 0; j0 < m; j0 += block) {
            const Index k = std::min(block, m - j0);
            s_block.resize(d, k);
            gaussian_columns(st, d, j0, s_block);
            out.noalias() += s_block * a.middleRows(j0, k);
          }
        } else if constexpr (std::is_same_v<T, CountSketch>) {
          for (Index c = 0; c < n; ++c) {
            const double* src = a.col(c).data();
            double* dst = out.col(c).data();
            for (Index j = 0; j < m; ++j) dst[st.rows[j]] += st.signs[j] * src[j];
          }
        } else if constexpr (std::is_same_v<T, SparseSign>) {
          const Index s = st.per_column;
          for (Index c = 0; c < n; ++c) {
            const double* src = a.col(c).data();
            double* dst = out.col(c).data();
            for (Index j = 0; j < m; ++j) {
              const double v = src[j];
              for (Index t = j * s; t < (j + 1) * s; ++t) dst[st.rows[t]] += st.values[t] * v;
            }
          }
        } else if constexpr (std::is_same_v<T, Srht>) {
          std::vector<double> buf(static_cast<std::size_t>(st.padded));
          for (Index c = 0; c < n; ++c) {
            const double* src = a.col(c).data();
            for (Index i = 0; i < m; ++i) buf[i] = st.signs[i] * src[i];
            std::fill(buf.begin() + m, buf.end(), 0.0);
            fwht_inplace(buf);
            for (Index r = 0; r < d; ++r) out(r, c) = st.scale * buf[st.sampled[r]];
          }
        }
      },
      op.state());
  return out;
}

inline Eigen::MatrixXd apply_sparse(const SketchOperator& op, const SparseMatrix& a) {
  using namespace sketch_state;
  const Index d = op.target_dim();
  const Index n = a.cols();
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto va = a.values();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, n);

  std::visit(
      [&](const auto& st) {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, Identity>) {
          out = a.to_dense().eigen();
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          Eigen::MatrixXd s_col(d, 1);
          for (Index j = 0; j < a.rows(); ++j) {
            if (rp[j] == rp[j + 1]) continue;
            gaussian_columns(st, d, j, s_col);
            for (Index k = rp[j]; k < rp[j + 1]; ++k) out.col(ci[k]) += va[k] * s_col.col(0);
          }
        } else if constexpr (std::is_same_v<T, CountSketch>) {
          for (Index j = 0; j < a.rows(); ++j) {
            const Index r = st.rows[j];
            const double sg = st.signs[j];
            for (Index k = rp[j]; k < rp[j + 1]; ++k) out(r, ci[k]) += sg * va[k];
          }
        } else if constexpr (std::is_same_v<T, SparseSign>) {
          const Index s = st.per_column;
          for (Index j = 0; j < a.rows(); ++j) {
            for (Index k = rp[j]; k < rp[j + 1]; ++k) {
              for (Index t = j * s; t < (j + 1) * s; ++t) out(st.rows[t], ci[k]) += st.values[t] * va[k];
            }
          }
        } else if constexpr (std::is_same_v<T, Srht>) {
          // Column access through a transposed copy (CSC of A).
          std::vector<Index> col_ptr(static_cast<std::size_t>(n) + 1, 0);
          for (Index k = 0; k < a.nnz(); ++k) ++col_ptr[static_cast<std::size_t>(ci[k]) + 1];
          for (std::size_t c = 1; c < col_ptr.size(); ++c) col_ptr[c] += col_ptr[c - 1];
          std::vector<Index> row_of(static_cast<std::size_t>(a.nnz()));
          std::vector<double> val_of(static_cast<std::size_t>(a.nnz()));
          std::vector<Index> fill(col_ptr.begin(), col_ptr.end() - 1);
          for (Index i = 0; i < a.rows(); ++i) {
            for (Index k = rp[i]; k < rp[i + 1]; ++k) {
              const auto pos = fill[static_cast<std::size_t>(ci[k])]++;
              row_of[pos] = i;
              val_of[pos] = va[k];
            }
          }
          std::vector<double> buf(static_cast<std::size_t>(st.padded));
          for (Index c = 0; c < n; ++c) {
            std::fill(buf.begin(), buf.end(), 0.0);
            for (Index k = col_ptr[c]; k < col_ptr[c + 1]; ++k) buf[row_of[k]] = st.signs[row_of[k]] * val_of[k];
            fwht_inplace(buf);
            for (Index r = 0; r < d; ++r) out(r, c) = st.scale * buf[st.sampled[r]];
          }
        }
      },
      op.state());
  return out;
}

}  // namespace detail

/// S A for dense A (m x n); returns d x n.
inline DenseMatrix apply_to_matrix(const SketchOperator& op, const DenseMatrix& a) {
  if (a.rows() != op.source_dim()) {
    throw ShapeError("sketch expects " + std::to_string(op.source_dim()) + " rows, matrix has " +
                     std::to_string(a.rows()));
  }
  return DenseMatrix(detail::apply_dense(op, a.eigen()));
}

/// S A for sparse A; cost proportional to nnz(A) for the hashed kinds.
inline DenseMatrix apply_to_matrix(const SketchOperator& op, const SparseMatrix& a) {
  if (a.rows() != op.source_dim()) {
    throw ShapeError("sketch expects " + std::to_string(op.source_dim()) + " rows, matrix has " +
                     std::to_string(a.rows()));
  }
  return DenseMatrix(detail::apply_sparse(op, a));
}

/// S b, computed through the same kernel as a one-column matrix.
inline Vector apply_to_vector(const SketchOperator& op, const Vector& b) {
  if (b.size() != op.source_dim()) {
    throw ShapeError("sketch expects length " + std::to_string(op.source_dim()) + ", vector has " +
                     std::to_string(b.size()));
  }
  const Eigen::Map<const Eigen::MatrixXd> col(b.eigen().data(), b.size(), 1);
  Eigen::MatrixXd sb = detail::apply_dense(op, col);
  return Vector(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(sb.data(), sb.rows())));
}

inline constexpr Index kMaterializeLimit = 10'000'000;

/// Explicit d x m matrix of the operator, built directly from its state (not
/// through the apply kernels). Test-scale only.
inline DenseMatrix materialize(const SketchOperator& op) {
  using namespace sketch_state;
  const Index m = op.source_dim();
  const Index d = op.target_dim();
  if (d * m > kMaterializeLimit) {
    throw CapacityError("materialize: " + std::to_string(d) + "x" + std::to_string(m) + " exceeds " +
                        std::to_string(kMaterializeLimit) + " entries");
  }
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, m);
  std::visit(
      [&](const auto& st) {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, Identity>) {
          s.setIdentity();
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          detail::gaussian_columns(st, d, 0, s);
        } else if constexpr (std::is_same_v<T, CountSketch>) {
          for (Index j = 0; j < m; ++j) s(st.rows[j], j) = st.signs[j];
        } else if constexpr (std::is_same_v<T, SparseSign>) {
          const Index k = st.per_column;
          for (Index j = 0; j < m; ++j) {
            for (Index t = j * k; t < (j + 1) * k; ++t) s(st.rows[t], j) = st.values[t];
          }
        } else if constexpr (std::is_same_v<T, Srht>) {
          // Sylvester Hadamard: H(r, c) = (-1)^popcount(r & c).
          for (Index i = 0; i < d; ++i) {
            const auto r = static_cast<std::uint64_t>(st.sampled[i]);
            for (Index j = 0; j < m; ++j) {
              const bool odd = std::popcount(r & static_cast<std::uint64_t>(j)) & 1;
              s(i, j) = st.scale * st.signs[j] * (odd ? -1.0 : 1.0);
            }
          }
        }
      },
      op.state());
  return DenseMatrix(std::move(s));
}

}  // namespace sketchls
