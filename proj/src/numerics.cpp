#include "da/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "da/error.hpp"

namespace da::numerics {

namespace {

// Flips each column so its largest-magnitude entry (first such index on ties)
// is nonnegative.
void fix_column_signs(Matrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    Eigen::Index imax = 0;
    double amax = -1.0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double a = std::abs(m(r, c));
      if (a > amax) {
        amax = a;
        imax = r;
      }
    }
    if (m(imax, c) < 0.0) m.col(c) = -m.col(c);
  }
}

}  // namespace

Subspace pca(const Matrix& x, Eigen::Index k) {
  const Eigen::Index kmax = std::min(x.rows() - 1, x.cols());
  if (k < 1 || k > kmax) {
    throw InvalidArgumentError("pca: k=" + std::to_string(k) +
                               " out of range [1, " + std::to_string(kmax) +
                               "]");
  }

  Vector mean = x.colwise().mean();
  Matrix centered = x.rowwise() - mean.transpose();

  const double scale = std::max(1.0, x.norm());
  if (centered.norm() <= 1e-12 * scale) {
    throw DataError("pca: input has zero variance");
  }

  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix basis = svd.matrixV().leftCols(k);
  fix_column_signs(basis);

  return Subspace{std::move(basis), std::move(mean)};
}

Matrix orthonormal_complement(const Subspace& s) {
  const Eigen::Index d = s.ambient_dim();
  const Eigen::Index k = s.k();
  if (k >= d) {
    throw InvalidArgumentError(
        "orthonormal_complement: subspace already spans the ambient space");
  }

  // Full QR of the basis: the first k columns of Q span the subspace, the
  // remaining d-k span its complement.
  Eigen::HouseholderQR<Matrix> qr(s.basis);
  Matrix q = qr.householderQ();
  return q.rightCols(d - k);
}

std::vector<double> principal_angles(const Subspace& u, const Subspace& v) {
  if (u.ambient_dim() != v.ambient_dim() || u.k() != v.k()) {
    throw InvalidArgumentError("principal_angles: dimension mismatch");
  }

  Matrix cross = u.basis.transpose() * v.basis;
  Eigen::JacobiSVD<Matrix> svd(cross);
  const Vector& sigma = svd.singularValues();  // descending

  std::vector<double> angles(static_cast<std::size_t>(sigma.size()));
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    angles[static_cast<std::size_t>(i)] =
        std::acos(std::clamp(sigma(i), 0.0, 1.0));
  }
  return angles;  // sigma descending => angles ascending
}

Eigen::Index default_subspace_dim(Eigen::Index cols, Eigen::Index rows_source,
                                  Eigen::Index rows_target) {
  return std::max<Eigen::Index>(
      1, std::min({cols, Eigen::Index{20}, rows_source - 1, rows_target - 1}));
}

}  // namespace da::numerics
