#include "da/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "da/error.hpp"

namespace da::mmd {

namespace {

void check_pair(const Matrix& xs, const Matrix& xt, const char* op) {
  if (xs.rows() < 1 || xt.rows() < 1) {
    throw InvalidArgumentError(std::string(op) + ": empty sample");
  }
  if (xs.cols() != xt.cols()) {
    throw InvalidArgumentError(std::string(op) + ": column mismatch (" +
                               std::to_string(xs.cols()) + " vs " +
                               std::to_string(xt.cols()) + ")");
  }
}

// Gram matrix between the rows of a and b.
Matrix gram(const Matrix& a, const Matrix& b, const KernelSpec& kernel) {
  if (kernel.kind == KernelKind::Linear) return a * b.transpose();

  // rbf: exp(-gamma * ||x - y||^2) via the squared-distance expansion
  Vector an = a.rowwise().squaredNorm();
  Vector bn = b.rowwise().squaredNorm();
  Matrix d2 = (-2.0 * a * b.transpose());
  d2.colwise() += an;
  d2.rowwise() += bn.transpose();
  return (-kernel.gamma * d2.cwiseMax(0.0)).array().exp();
}

}  // namespace

double mmd_linear(const Matrix& xs, const Matrix& xt) {
  check_pair(xs, xt, "mmd_linear");
  Vector diff = xs.colwise().mean() - xt.colwise().mean();
  return diff.norm();
}

double mmd2_kernel(const Matrix& xs, const Matrix& xt, const KernelSpec& kernel,
                   bool unbiased) {
  check_pair(xs, xt, "mmd2_kernel");
  if (kernel.kind == KernelKind::Rbf && !(kernel.gamma > 0.0)) {
    throw InvalidArgumentError("mmd2_kernel: rbf gamma must be positive");
  }
  const auto m = static_cast<double>(xs.rows());
  const auto n = static_cast<double>(xt.rows());
  if (unbiased && (xs.rows() < 2 || xt.rows() < 2)) {
    throw InvalidArgumentError(
        "mmd2_kernel: unbiased estimator needs at least 2 rows per sample");
  }

  Matrix kss = gram(xs, xs, kernel);
  Matrix ktt = gram(xt, xt, kernel);
  Matrix kst = gram(xs, xt, kernel);

  double ss, tt;
  if (unbiased) {
    ss = (kss.sum() - kss.trace()) / (m * (m - 1.0));
    tt = (ktt.sum() - ktt.trace()) / (n * (n - 1.0));
  } else {
    ss = kss.sum() / (m * m);
    tt = ktt.sum() / (n * n);
  }
  const double st = kst.sum() / (m * n);
  return ss + tt - 2.0 * st;
}

double rbf_median_gamma(const Matrix& xs, const Matrix& xt) {
  check_pair(xs, xt, "rbf_median_gamma");
  Matrix pooled(xs.rows() + xt.rows(), xs.cols());
  pooled << xs, xt;

  const Eigen::Index n = pooled.rows();
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      dists.push_back((pooled.row(i) - pooled.row(j)).norm());
    }
  }
  if (dists.empty()) return 1.0;

  std::sort(dists.begin(), dists.end());
  const std::size_t half = dists.size() / 2;
  const double median = (dists.size() % 2 == 1)
                            ? dists[half]
                            : 0.5 * (dists[half - 1] + dists[half]);
  if (median <= 0.0) return 1.0;
  return 1.0 / (2.0 * median * median);
}

MmdReport mmd_linear_report(const Matrix& xs, const Matrix& xt) {
  return {mmd_linear(xs, xt), "linear", xs.rows(), xt.rows()};
}

MmdReport mmd2_kernel_report(const Matrix& xs, const Matrix& xt,
                             const KernelSpec& kernel, bool unbiased) {
  std::string tag = "kernel2_";
  tag += kernel.kind == KernelKind::Rbf ? "rbf" : "linear";
  tag += unbiased ? "_unbiased" : "_biased";
  return {mmd2_kernel(xs, xt, kernel, unbiased), std::move(tag), xs.rows(),
          xt.rows()};
}

std::vector<RankedRepresentation> rank_representations(
    const std::vector<RepresentationPair>& candidates) {
  if (candidates.empty()) {
    throw InvalidArgumentError("rank_representations: empty candidate list");
  }

  std::vector<RankedRepresentation> ranked;
  ranked.reserve(candidates.size());
  for (const auto& c : candidates) {
    ranked.push_back({c.name, mmd_linear(c.source, c.target)});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.mmd < b.mmd; });
  return ranked;
}

int select_width(const std::vector<WidthCandidate>& results) {
  if (results.empty()) {
    throw InvalidArgumentError("select_width: empty result list");
  }

  int best_width = results.front().width;
  double best_mmd = mmd_linear(results.front().source_repr,
                               results.front().target_repr);
  for (std::size_t i = 1; i < results.size(); ++i) {
    const double v = mmd_linear(results[i].source_repr, results[i].target_repr);
    if (v < best_mmd || (v == best_mmd && results[i].width < best_width)) {
      best_mmd = v;
      best_width = results[i].width;
    }
  }
  return best_width;
}

}  // namespace da::mmd
