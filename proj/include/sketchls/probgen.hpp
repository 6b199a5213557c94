#pragma once

// Synthetic least-squares problems with a prescribed condition number kappa,
// known minimizer x* and optimal residual norm beta.
//
//   A = U diag(sigma) V^T, U (m x n) and V (n x n) orthonormal factors of
//       standard-normal matrices, sigma_i = kappa^{-(i-1)/(n-1)} geometrically
//       spaced from 1 down to 1/kappa
//   x* standard normal, scaled to unit norm
//   r  = beta * u, u a unit vector orthogonal to range(U)
//   b  = A x* + r
//
// Because r is orthogonal to range(A), x* minimizes ||Ax - b|| and the minimum
// is beta. The residual direction is projected against U twice to keep
// ||U^T u|| at roundoff level.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "sketchls/errors.hpp"
#include "sketchls/format.hpp"
#include "sketchls/linalg.hpp"
#include "sketchls/matrix_market.hpp"
#include "sketchls/rng.hpp"
#include "sketchls/solvers.hpp"

namespace sketchls {

struct ProblemSpec {
  Index m = 0;
  Index n = 0;
  double kappa = 1e10;
  double beta = 1e-10;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1) throw SpecError("problem needs n >= 1, got " + std::to_string(n));
    if (m < n) throw SpecError("problem needs m >= n, got m=" + std::to_string(m) + ", n=" + std::to_string(n));
    if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw SpecError("kappa must be a finite value >= 1");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw SpecError("beta must be a finite value >= 0");
    if (beta > 0.0 && m == n) {
      throw InfeasibleResidualError("a nonzero optimal residual needs m > n (got m = n = " + std::to_string(n) + ")");
    }
  }
};

/// Singular values used by generate_problem, descending.
inline Eigen::VectorXd prescribed_spectrum(Index n, double kappa) {
  Eigen::VectorXd sigma(n);
  for (Index i = 0; i < n; ++i) {
    sigma[i] = n == 1 ? 1.0 : std::pow(kappa, -static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return sigma;
}

namespace detail {

enum : std::uint64_t { kStreamLeft = 1, kStreamRight = 2, kStreamSolution = 3, kStreamResidual = 4 };

inline Eigen::MatrixXd orthonormal_factor(std::uint64_t key, Index rows, Index cols) {
  Eigen::MatrixXd g(rows, cols);
  rng::fill_normal(key, 0, {g.data(), static_cast<std::size_t>(g.size())});
  return householder_qr(g, true).q;
}

}  // namespace detail

inline LeastSquaresProblem<DenseMatrix> generate_problem(const ProblemSpec& spec) {
  spec.validate();
  const Index m = spec.m;
  const Index n = spec.n;
  const auto key = [&](std::uint64_t tag) { return rng::derive_key(spec.seed, tag); };

  Eigen::MatrixXd u = detail::orthonormal_factor(key(detail::kStreamLeft), m, n);
  const Eigen::MatrixXd v = detail::orthonormal_factor(key(detail::kStreamRight), n, n);
  const Eigen::MatrixXd sigma_vt = prescribed_spectrum(n, spec.kappa).asDiagonal() * v.transpose();

  Eigen::VectorXd x_star(n);
  rng::fill_normal(key(detail::kStreamSolution), 0, {x_star.data(), static_cast<std::size_t>(n)});
  x_star /= x_star.norm();

  Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
  if (spec.beta > 0.0) {
    rng::fill_normal(key(detail::kStreamResidual), 0, {r.data(), static_cast<std::size_t>(m)});
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd coeff = u.transpose() * r;
      r.noalias() -= u * coeff;
    }
    r *= spec.beta / r.norm();
  }

  Eigen::MatrixXd a(m, n);
  a.noalias() = u * sigma_vt;
  u.resize(0, 0);

  Eigen::VectorXd b = a * x_star;
  b += r;
  return LeastSquaresProblem<DenseMatrix>(DenseMatrix(std::move(a)), Vector(std::move(b)), Vector(std::move(x_star)),
                                          spec.beta);
}

// ---------------------------------------------------------------------------
// Problem directories: A.mtx, b.mtx, xstar.mtx, meta.txt

inline void write_meta(const std::filesystem::path& path, const ProblemSpec& spec) {
  std::ofstream os(path);
  if (!os) throw FileError("cannot open for writing", path.string());
  os << "m=" << spec.m << "\n"
     << "n=" << spec.n << "\n"
     << "kappa=" << fmt::shortest(spec.kappa) << "\n"
     << "beta=" << fmt::shortest(spec.beta) << "\n"
     << "seed=" << spec.seed << "\n";
  if (!os) throw FileError("write failed", path.string());
}

inline ProblemSpec read_meta(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FileError("cannot open for reading", path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("metadata line without '='", path.string());
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto field = [&](const std::string& k) -> const std::string& {
    const auto it = kv.find(k);
    if (it == kv.end()) throw ParseError("metadata is missing '" + k + "'", path.string());
    return it->second;
  };
  const auto as_int = [&](const std::string& k) {
    const auto v = fmt::parse_int<long long>(field(k));
    if (!v) throw ParseError("metadata field '" + k + "' is not an integer", path.string());
    return static_cast<Index>(*v);
  };
  const auto as_real = [&](const std::string& k) {
    const auto v = fmt::parse_double(field(k));
    if (!v) throw ParseError("metadata field '" + k + "' is not a number", path.string());
    return *v;
  };
  ProblemSpec spec;
  spec.m = as_int("m");
  spec.n = as_int("n");
  spec.kappa = as_real("kappa");
  spec.beta = as_real("beta");
  const auto seed = fmt::parse_int<std::uint64_t>(field("seed"));
  if (!seed) throw ParseError("metadata field 'seed' is not an unsigned integer", path.string());
  spec.seed = *seed;
  return spec;
}

inline void write_problem_dir(const std::filesystem::path& dir, const LeastSquaresProblem<DenseMatrix>& p,
                              const ProblemSpec& spec) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw FileError("cannot create directory", dir.string());
  mm::write_file(dir / "A.mtx", p.a);
  mm::write_file(dir / "b.mtx", p.b);
  if (p.x_star) mm::write_file(dir / "xstar.mtx", *p.x_star);
  write_meta(dir / "meta.txt", spec);
}

struct LoadedProblem {
  LeastSquaresProblem<DenseMatrix> problem;
  ProblemSpec spec;
};

inline LoadedProblem read_problem_dir(const std::filesystem::path& dir) {
  auto spec = read_meta(dir / "meta.txt");
  auto a = mm::read_dense(dir / "A.mtx");
  auto b = mm::read_vector(dir / "b.mtx");
  std::optional<Vector> x_star;
  if (std::filesystem::exists(dir / "xstar.mtx")) x_star = mm::read_vector(dir / "xstar.mtx");
  return {LeastSquaresProblem<DenseMatrix>(std::move(a), std::move(b), std::move(x_star), spec.beta), spec};
}

}  // namespace sketchls
