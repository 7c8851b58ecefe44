// Shared helpers for the test suites. Random draws here use std::mt19937_64 on
// purpose: the oracles must not depend on the library's own PRNG.
#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "da/numerics.hpp"

namespace test_util {

inline da::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols,
                                std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, scale);
  da::Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(gen);
  }
  return m;
}

/// Orthonormal d x k frame from the QR factorization of a Gaussian matrix.
inline da::Matrix random_orthonormal(Eigen::Index d, Eigen::Index k,
                                     std::uint64_t seed) {
  da::Matrix g = random_matrix(d, k, seed);
  Eigen::HouseholderQR<da::Matrix> qr(g);
  da::Matrix q = qr.householderQ();
  return q.leftCols(k);
}

inline da::numerics::Subspace random_subspace(Eigen::Index d, Eigen::Index k,
                                              std::uint64_t seed) {
  return {random_orthonormal(d, k, seed), da::Vector::Zero(d)};
}

/// Unique scratch directory under the system temp dir.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("domadapt_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace test_util
