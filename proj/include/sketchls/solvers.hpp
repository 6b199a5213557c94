#pragma once

// Solution paths for min ||Ax - b||:
//   lsqr    unpreconditioned LSQR (the baseline)
//   saa     sketch-and-apply: QR of SA, x = R^{-1} Q^T S b
//   sap     sketch-and-precondition: LSQR on A R^{-1} with R from QR(SA),
//           warm-started from the saa solution by default
//   direct  QR of A itself
//
// The embedding dimension is d = clamp(ceil(d_factor * n), n, m) unless the
// SketchSpec pins it; d_factor defaults to 4, which keeps the distortion of the
// sparse embeddings well below 1 in practice.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "sketchls/errors.hpp"
#include "sketchls/linalg.hpp"
#include "sketchls/lsqr.hpp"
#include "sketchls/rng.hpp"
#include "sketchls/sketch.hpp"

namespace sketchls {

template <MatrixOperand M>
struct LeastSquaresProblem {
  M a;
  Vector b;
  std::optional<Vector> x_star;
  /// Optimal residual norm ||A x_star - b||, when known.
  std::optional<double> beta;

  LeastSquaresProblem(M a_in, Vector b_in, std::optional<Vector> x_star_in = std::nullopt,
                      std::optional<double> beta_in = std::nullopt)
      : a(std::move(a_in)), b(std::move(b_in)), x_star(std::move(x_star_in)), beta(beta_in) {
    if (b.size() != a.rows()) {
      throw ShapeError("problem: matrix has " + std::to_string(a.rows()) + " rows, rhs has length " +
                       std::to_string(b.size()));
    }
    if (x_star && x_star->size() != a.cols()) {
      throw ShapeError("problem: ground truth has length " + std::to_string(x_star->size()) + ", expected " +
                       std::to_string(a.cols()));
    }
  }

  Index rows() const { return a.rows(); }
  Index cols() const { return a.cols(); }
};

/// Sketch seed for one method, so SAA and SAP runs sharing a base seed draw
/// independent sketches.
inline std::uint64_t derive_sketch_seed(std::uint64_t base, Method method) {
  return rng::derive_key(base, 0x5a17ULL + static_cast<std::uint64_t>(method));
}

namespace detail {

inline Eigen::MatrixXd sketch_raw(const SketchOperator& op, const DenseMatrix& a) {
  return apply_dense(op, a.eigen());
}

inline Eigen::MatrixXd sketch_raw(const SketchOperator& op, const SparseMatrix& a) {
  return apply_sparse(op, a);
}

template <MatrixOperand M>
void check_tall(const LeastSquaresProblem<M>& p, const char* who) {
  if (p.rows() < p.cols()) {
    throw ShapeError(std::string(who) + " needs an overdetermined problem (m >= n), got " +
                     detail::dims(p.rows(), p.cols()));
  }
}

struct SketchedFactors {
  SketchOperator op;
  Eigen::MatrixXd q;
  Eigen::MatrixXd r;
};

/// Builds S, forms SA and factors it. Q is formed only when asked for.
template <MatrixOperand M>
SketchedFactors sketch_and_factor(const LeastSquaresProblem<M>& p, const SketchSpec& spec, const SolverOptions& opts,
                                  bool want_q) {
  SketchSpec resolved = spec;
  resolved.embed_dim = resolve_embed_dim(spec, p.rows(), p.cols(), opts.d_factor);
  auto op = build_sketch(resolved, p.rows());
  if (op.target_dim() < p.cols()) {
    throw SingularFactorError("sketched matrix SA (sketch=" + std::string(to_string(spec.kind)) +
                                  ", d=" + std::to_string(op.target_dim()) + ") has fewer rows than n=" +
                                  std::to_string(p.cols()) + "; use an embedding dimension of at least n",
                              op.target_dim());
  }
  Eigen::MatrixXd sa = sketch_raw(op, p.a);
  try {
    auto qr = householder_qr(sa, want_q);
    return {std::move(op), std::move(qr.q), std::move(qr.r)};
  } catch (const SingularFactorError& e) {
    throw SingularFactorError("sketched matrix SA (sketch=" + std::string(to_string(spec.kind)) +
                                  ", d=" + std::to_string(op.target_dim()) + ") is rank deficient at column " +
                                  std::to_string(e.column()) + "; try a larger embedding dimension",
                              e.column());
  }
}

/// R^{-1} Q^T (S b)
inline Eigen::VectorXd sketched_solution(const SketchedFactors& f, const Vector& b) {
  const Vector sb = apply_to_vector(f.op, b);
  Eigen::VectorXd z = f.q.transpose() * sb.eigen();
  kernel::trsv_upper(f.r, z, false);
  return z;
}

}  // namespace detail

template <MatrixOperand M>
SolveResult sketch_and_apply(const LeastSquaresProblem<M>& p, const SketchSpec& spec, const SolverOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  opts.validate();
  detail::check_tall(p, "sketch_and_apply");
  const auto f = detail::sketch_and_factor(p, spec, opts, true);

  SolveResult res;
  res.x = Vector(detail::sketched_solution(f, p.b));
  res.method = Method::saa;
  res.sketch = spec.kind;
  res.embed_dim = f.op.target_dim();
  res.iterations = 0;
  res.residual_norm = residual_norm(p.a, p.b, res.x);
  res.termination = Termination::direct;
  res.wall_time_s = detail::seconds_since(t0);
  return res;
}

template <MatrixOperand M>
SolveResult sketch_and_precondition(const LeastSquaresProblem<M>& p, const SketchSpec& spec,
                                    const SolverOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  opts.validate();
  detail::check_tall(p, "sketch_and_precondition");
  auto f = detail::sketch_and_factor(p, spec, opts, opts.warm_start);
  const DenseMatrix r(f.r);

  SolveResult res;
  if (opts.warm_start) {
    // Solve for the correction dx in min ||A dx - (b - A x0)||.
    const Eigen::VectorXd x0 = detail::sketched_solution(f, p.b);
    Eigen::VectorXd ax0;
    kernel::gemv(p.a, x0, ax0);
    const Vector r0(Eigen::VectorXd(p.b.eigen() - ax0));
    auto inner = lsqr(p.a, r0, opts, &r);
    res.x = Vector(Eigen::VectorXd(x0 + inner.x.eigen()));
    res.iterations = inner.iterations;
    res.termination = inner.termination;
    res.residual_history = std::move(inner.residual_history);
  } else {
    auto inner = lsqr(p.a, p.b, opts, &r);
    res.x = std::move(inner.x);
    res.iterations = inner.iterations;
    res.termination = inner.termination;
    res.residual_history = std::move(inner.residual_history);
  }
  res.method = Method::sap;
  res.sketch = spec.kind;
  res.embed_dim = f.op.target_dim();
  res.residual_norm = residual_norm(p.a, p.b, res.x);
  res.wall_time_s = detail::seconds_since(t0);
  return res;
}

template <MatrixOperand M>
SolveResult solve_direct(const LeastSquaresProblem<M>& p) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::check_tall(p, "direct solve");
  SolveResult res;
  if constexpr (std::is_same_v<M, DenseMatrix>) {
    res.x = normal_equations_oracle(p.a, p.b);
  } else {
    res.x = normal_equations_oracle(p.a.to_dense(), p.b);
  }
  res.method = Method::direct;
  res.residual_norm = residual_norm(p.a, p.b, res.x);
  res.termination = Termination::direct;
  res.wall_time_s = detail::seconds_since(t0);
  return res;
}

/// Uniform entry point. `spec` is ignored by lsqr and direct. wall_time_s
/// covers the whole call, sketch construction included.
template <MatrixOperand M>
SolveResult solve(const LeastSquaresProblem<M>& p, Method method, const SketchSpec& spec = {},
                  const SolverOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult res;
  switch (method) {
    case Method::lsqr: res = lsqr(p.a, p.b, opts); break;
    case Method::saa: res = sketch_and_apply(p, spec, opts); break;
    case Method::sap: res = sketch_and_precondition(p, spec, opts); break;
    case Method::direct: res = solve_direct(p); break;
  }
  res.wall_time_s = detail::seconds_since(t0);
  return res;
}

}  // namespace sketchls
