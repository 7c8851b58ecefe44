#pragma once

#include <string>
#include <utility>
#include <vector>

#include "da/numerics.hpp"

namespace da::mmd {

enum class KernelKind { Linear, Rbf };

struct KernelSpec {
  KernelKind kind = KernelKind::Linear;
  double gamma = 1.0;  // rbf bandwidth, ignored for linear
};

/// Linear MMD: Euclidean distance between the empirical feature means of the
/// two samples. This is the quantity the trainer regularizes and the
/// selection procedures minimize.
double mmd_linear(const Matrix& xs, const Matrix& xt);

/// Kernel MMD^2, biased (V-statistic) or unbiased (U-statistic, diagonal
/// terms of the within-sample Gram matrices excluded). The biased form is
/// nonnegative up to rounding; the unbiased form may be negative. Unbiased
/// requires at least two rows on each side.
double mmd2_kernel(const Matrix& xs, const Matrix& xt, const KernelSpec& kernel,
                   bool unbiased);

/// Median-heuristic RBF bandwidth: gamma = 1 / (2 m^2) with m the median
/// pairwise Euclidean distance over the pooled sample. Falls back to 1.0
/// when the median distance is zero.
double rbf_median_gamma(const Matrix& xs, const Matrix& xt);

/// Tagged MMD value with the sample sizes it was computed from. The tag
/// names the producing estimator: "linear", or
/// "kernel2_{linear|rbf}_{biased|unbiased}".
struct MmdReport {
  double value = 0.0;
  std::string estimator;
  Eigen::Index n_source = 0;
  Eigen::Index n_target = 0;
};

MmdReport mmd_linear_report(const Matrix& xs, const Matrix& xt);
MmdReport mmd2_kernel_report(const Matrix& xs, const Matrix& xt,
                             const KernelSpec& kernel, bool unbiased);

struct RankedRepresentation {
  std::string name;
  double mmd = 0.0;
};

/// Candidate representation for ranking: a name plus the source/target
/// features expressed in that representation.
struct RepresentationPair {
  std::string name;
  Matrix source;
  Matrix target;
};

/// Orders candidates by ascending linear MMD; the first entry is the most
/// domain-invariant representation. Ties keep input order.
std::vector<RankedRepresentation> rank_representations(
    const std::vector<RepresentationPair>& candidates);

struct WidthCandidate {
  int width = 0;
  Matrix source_repr;  // adaptation-layer activations of the source pool
  Matrix target_repr;
};

/// Width whose linear MMD between the learned representations is minimal;
/// ties break toward the smaller width.
int select_width(const std::vector<WidthCandidate>& results);

}  // namespace da::mmd
