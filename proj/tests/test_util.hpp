#pragma once

// Test-only data generators. These use the standard library engines so the
// inputs do not depend on the library's own random streams.

#include <filesystem>
#include <random>
#include <string>

#include "sketchls/linalg.hpp"

namespace sketchls::test {

inline Eigen::MatrixXd random_matrix(Index rows, Index cols, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(gen);
  }
  return m;
}

inline Eigen::VectorXd random_vector(Index n, unsigned seed) {
  return random_matrix(n, 1, seed).col(0);
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = b.norm();
  return scale == 0.0 ? a.norm() : (a - b).norm() / scale;
}

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::path(SKETCHLS_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace sketchls::test
