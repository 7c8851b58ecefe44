#pragma once

#include <Eigen/Dense>
#include <vector>

namespace da {

using Matrix = Eigen::MatrixXd;  // rows = examples, cols = feature dimensions
using Vector = Eigen::VectorXd;

namespace numerics {

/// Orthonormal basis of a low-dimensional embedding, with the centering
/// offset that was removed before fitting.
struct Subspace {
  Matrix basis;  // ambient_dim x k, basis^T basis = I
  Vector mean;   // ambient_dim

  Eigen::Index ambient_dim() const { return basis.rows(); }
  Eigen::Index k() const { return basis.cols(); }
};

/// Top-k principal directions of X (rows = examples), mean-centered.
/// Columns are ordered by descending singular value. Each column is sign-fixed
/// so that its largest-magnitude entry is positive, which makes the result
/// reproducible run to run.
///
/// Requires 1 <= k <= min(rows-1, cols). Throws InvalidArgumentError when k is
/// out of range and DataError when X has no variance at all.
Subspace pca(const Matrix& x, Eigen::Index k);

/// Orthonormal basis R of the orthogonal complement of s.basis:
/// R^T R = I and R^T basis = 0. Shape is ambient_dim x (ambient_dim - k);
/// requires k < ambient_dim.
Matrix orthonormal_complement(const Subspace& s);

/// Principal angles between two subspaces of equal ambient dimension and k,
/// ascending, each in [0, pi/2]. Computed from the singular values of
/// basis(U)^T basis(V), clamped to [0,1] before acos so rounding cannot
/// produce NaN at zero angle.
std::vector<double> principal_angles(const Subspace& u, const Subspace& v);

/// Composite trapezoid rule for integrating f over [a, b] with n panels.
template <typename F>
double trapezoid(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double acc = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) acc += f(a + i * h);
  return acc * h;
}

/// Default embedding dimension for the subspace baselines when the caller
/// does not fix one: min(cols, 20, rows_source-1, rows_target-1).
Eigen::Index default_subspace_dim(Eigen::Index cols, Eigen::Index rows_source,
                                  Eigen::Index rows_target);

}  // namespace numerics
}  // namespace da
