#pragma once

// LSQR (Paige & Saunders) for min ||Ax - b||, optionally right-preconditioned
// by an upper-triangular R: the iteration runs on B = A R^{-1} and maps the
// iterate back with x = R^{-1} y.
//
// Stopping rules follow the reference implementation without damping or a
// condition limit:
//   ||r|| <= btol ||b|| + atol ||B|| ||y||        (compatible systems)
//   ||B^T r|| / (||B|| ||r||) <= atol              (least squares)
// plus their machine-precision variants. ||B|| is the running Frobenius
// estimate accumulated from the bidiagonalization coefficients.

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sketchls/errors.hpp"
#include "sketchls/linalg.hpp"
#include "sketchls/sketch.hpp"

namespace sketchls {

enum class Method { lsqr, saa, sap, direct };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::lsqr: return "lsqr";
    case Method::saa: return "saa";
    case Method::sap: return "sap";
    case Method::direct: return "direct";
  }
  return "unknown";
}

inline Method parse_method(std::string_view s) {
  for (auto m : {Method::lsqr, Method::saa, Method::sap, Method::direct}) {
    if (s == to_string(m)) return m;
  }
  throw SpecError("unknown method '" + std::string(s) + "'");
}

enum class Termination {
  atol_btol,  // a tolerance rule fired
  max_iter,   // iteration cap reached
  direct,     // non-iterative solve
  target,     // the caller's monitor asked to stop
};

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::atol_btol: return "atol_btol";
    case Termination::max_iter: return "max_iter";
    case Termination::direct: return "direct";
    case Termination::target: return "target";
  }
  return "unknown";
}

struct SolverOptions {
  double atol = 1e-10;
  double btol = 1e-10;
  /// Defaults to 4n.
  std::optional<Index> max_iter;
  double d_factor = 4.0;
  /// Start SAP from the sketch-and-apply solution.
  bool warm_start = true;

  void validate() const {
    if (!(atol > 0.0) || !(btol > 0.0)) throw SpecError("solver tolerances must be positive");
    if (max_iter && *max_iter < 1) throw SpecError("max_iter must be at least 1");
    if (!(d_factor >= 1.0) || !std::isfinite(d_factor)) throw SpecError("d_factor must be >= 1");
  }

  Index iteration_cap(Index n) const { return max_iter.value_or(4 * n); }
};

struct SolveResult {
  Vector x;
  Method method = Method::lsqr;
  std::optional<SketchKind> sketch;
  std::optional<Index> embed_dim;
  Index iterations = 0;
  /// ||Ax - b||, recomputed from the returned x.
  double residual_norm = 0.0;
  Termination termination = Termination::atol_btol;
  double wall_time_s = 0.0;
  /// LSQR residual estimates: entry 0 is ||b||, entry k follows iteration k.
  std::vector<double> residual_history;
};

/// Called after every LSQR iteration with the current iterate in the original
/// variables. Returning true stops the solve with Termination::target.
using IterationMonitor = std::function<bool(Index iteration, const Eigen::VectorXd& x)>;

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void check_finite_scalar(double v, const char* what, Index itn) {
  if (!std::isfinite(v)) {
    throw NumericalBreakdownError(std::string("lsqr: non-finite ") + what + " at iteration " + std::to_string(itn));
  }
}

}  // namespace detail

template <MatrixOperand M>
SolveResult lsqr(const M& a, const Vector& b, const SolverOptions& opts = {}, const DenseMatrix* precond_r = nullptr,
                 const IterationMonitor& monitor = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  opts.validate();
  const Index m = a.rows();
  const Index n = a.cols();
  if (b.size() != m) {
    throw ShapeError("lsqr: matrix has " + std::to_string(m) + " rows, rhs has length " + std::to_string(b.size()));
  }
  if (precond_r != nullptr) {
    check_triangular_factor(*precond_r);
    if (precond_r->rows() != n) throw ShapeError("lsqr: preconditioner must be " + detail::dims(n, n));
  }
  const Index cap = opts.iteration_cap(n);
  constexpr double eps = std::numeric_limits<double>::epsilon();

  // Applies R^{-1} (or R^{-T}) in place when preconditioned.
  const auto precondition = [&](Eigen::VectorXd& z, bool transposed) {
    if (precond_r != nullptr) kernel::trsv_upper(precond_r->eigen(), z, transposed);
  };
  const auto to_original = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd x = y;
    precondition(x, false);
    return x;
  };

  SolveResult res;
  res.method = Method::lsqr;

  Eigen::VectorXd u = b.eigen();
  Eigen::VectorXd v(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  double beta = u.norm();
  const double bnorm = beta;
  double alpha = 0.0;
  if (beta > 0.0) {
    u /= beta;
    kernel::gemv_t(a, u, v);
    precondition(v, true);
    alpha = v.norm();
  } else {
    v.setZero();
  }
  detail::check_finite_scalar(alpha, "alpha", 0);
  if (alpha > 0.0) v /= alpha;
  res.residual_history.push_back(bnorm);

  Index itn = 0;
  Termination stop = Termination::atol_btol;
  bool done = alpha * beta == 0.0;  // A^T b = 0: x = 0 is optimal

  Eigen::VectorXd w = v;
  Eigen::VectorXd vp(n);
  Eigen::VectorXd at_u(n);
  double rhobar = alpha;
  double phibar = beta;
  double anorm = 0.0;

  while (!done) {
    ++itn;
    vp = v;
    precondition(vp, false);
    kernel::normal_sweep(a, vp, alpha, u, at_u);  // u <- A vp - alpha u, at_u <- A^T u
    beta = u.norm();
    detail::check_finite_scalar(beta, "beta", itn);
    if (beta > 0.0) {
      u /= beta;
      at_u /= beta;
      precondition(at_u, true);
      anorm = std::sqrt(anorm * anorm + alpha * alpha + beta * beta);
      v = at_u - beta * v;
      alpha = v.norm();
      detail::check_finite_scalar(alpha, "alpha", itn);
      if (alpha > 0.0) v /= alpha;
    }

    const double rho = std::hypot(rhobar, beta);
    const double cs = rhobar / rho;
    const double sn = beta / rho;
    const double theta = sn * alpha;
    rhobar = -cs * alpha;
    const double phi = cs * phibar;
    phibar = sn * phibar;
    const double tau = sn * phi;

    y += (phi / rho) * w;
    w = v - (theta / rho) * w;
    detail::check_finite_scalar(phibar, "residual estimate", itn);

    const double ynorm = y.norm();
    const double rnorm = phibar;
    const double arnorm = alpha * std::abs(tau);
    const double test1 = rnorm / bnorm;
    const double test2 = arnorm / (anorm * rnorm + eps);
    const double t1 = test1 / (1.0 + anorm * ynorm / bnorm);
    const double rtol = opts.btol + opts.atol * anorm * ynorm / bnorm;
    res.residual_history.push_back(rnorm);

    bool fired = false;
    if (1.0 + test2 <= 1.0 || 1.0 + t1 <= 1.0 || test2 <= opts.atol || test1 <= rtol) {
      fired = true;
      stop = Termination::atol_btol;
    } else if (monitor && monitor(itn, precond_r != nullptr ? to_original(y) : y)) {
      fired = true;
      stop = Termination::target;
    } else if (itn >= cap) {
      fired = true;
      stop = Termination::max_iter;
    }
    done = fired;
  }

  Vector x(to_original(y));
  res.residual_norm = residual_norm(a, b, x);
  res.x = std::move(x);
  res.iterations = itn;
  res.termination = stop;
  res.wall_time_s = detail::seconds_since(t0);
  return res;
}

}  // namespace sketchls
