#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "deltamix/matrix.hpp"

namespace testutil {

inline deltamix::DenseMatrix random_matrix(std::size_t rows, std::size_t cols,
                                           std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  deltamix::DenseMatrix m(rows, cols);
  for (double& v : m.data()) v = n(rng);
  return m;
}

inline Eigen::MatrixXd to_eigen(const deltamix::DenseMatrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

inline deltamix::DenseMatrix from_eigen(const Eigen::MatrixXd& e) {
  deltamix::DenseMatrix m(e.rows(), e.cols());
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j) m(i, j) = e(i, j);
  return m;
}

// Random symmetric positive-definite matrix a·aᵀ + shift·I.
inline deltamix::DenseMatrix random_spd(std::size_t n, std::mt19937_64& rng,
                                        double shift = 0.1) {
  const auto a = random_matrix(n, n + 2, rng);
  auto h = deltamix::matmul_nt(a, a);
  for (std::size_t i = 0; i < n; ++i) h(i, i) += shift;
  return h;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("deltamix_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
