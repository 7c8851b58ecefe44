#pragma once

#include <cstdint>
#include <vector>

#include "da/data.hpp"
#include "da/numerics.hpp"

namespace da::baselines {

/// One-vs-rest linear scorer: score_c(x) = weights.row(c) . x + bias(c).
struct LinearClassifier {
  Matrix weights;  // n_classes x dim
  Vector bias;     // n_classes

  Eigen::Index trained_dim() const { return weights.cols(); }
  Eigen::Index n_classes() const { return weights.rows(); }

  Matrix scores(const Matrix& x) const;

  /// Argmax prediction per row, ties toward the lower class index.
  std::vector<int> predict(const Matrix& x) const;
};

double accuracy(const LinearClassifier& clf, const LabeledDataset& test);

struct SvmParams {
  double c_reg = 0.01;
  int epochs = 100;
  std::uint64_t seed = 0;
};

/// One-vs-rest hinge-loss classifiers trained by projected subgradient
/// descent (Pegasos-style): per-example steps 1/(c_reg * t), projection of the
/// weight vector onto the 1/sqrt(c_reg) ball, unregularized bias. Returns the
/// best iterate seen on the per-epoch objective trace. Deterministic per seed.
LinearClassifier svm_train(const LabeledDataset& data, double c_reg, int epochs,
                           std::uint64_t seed);

/// Sum over classes of (c_reg/2)||w_c||^2 + mean hinge for the one-vs-rest
/// binary problems.
double svm_objective(const LinearClassifier& clf, const LabeledDataset& data,
                     double c_reg);

enum class FusionMode { Max, Interp };

struct FusionConfig {
  double alpha = 0.5;  // weight of the target scores in interp mode
};

/// Elementwise max of the two score vectors, or their convex combination
/// (1-alpha) * v_s + alpha * v_t.
Vector late_fusion(const Vector& v_source, const Vector& v_target,
                   FusionMode mode, const FusionConfig& cfg);

/// Feature replication: source row x -> (x; x; 0), target row x -> (x; 0; x).
/// Blocks are [shared | source-specific | target-specific].
Matrix daume_augment(const Matrix& x, bool is_source);

/// Closed-form subspace alignment map M* = basis(U)^T basis(V), the minimizer
/// of ||U M - V||_F^2 over k x k matrices.
Matrix sa_align(const numerics::Subspace& u, const numerics::Subspace& v);

/// SA pipeline: per-domain PCA, target rows mapped through U M* V^T back to
/// the ambient space, SVM trained on raw source rows, accuracy on the mapped
/// test rows.
double sa_adapt_and_classify(const LabeledDataset& source,
                             const Matrix& target_unlabeled,
                             const LabeledDataset& target_test, Eigen::Index k,
                             const SvmParams& svm);

struct GeodesicKernel {
  Matrix g;  // d x d, symmetric PSD
};

/// Factored geodesic between two subspaces:
/// phi(t) = up1 * diag(cos(t theta)) - rp2 * diag(sin(t theta)), with
/// phi(0) spanning U and phi(1) spanning V.
struct GfkFactors {
  Matrix up1;  // d x k
  Matrix rp2;  // d x k
  std::vector<double> theta;  // principal angles, ascending
};

GfkFactors gfk_factors(const numerics::Subspace& u,
                       const numerics::Subspace& v);

/// Geodesic flow point phi(t). Shared construction with gfk_compute, so
/// quadrature over phi(t) phi(t)^T is an independent check of the closed-form
/// integrals only.
Matrix gfk_flow(const numerics::Subspace& u, const numerics::Subspace& v,
                double t);

/// Closed form of integral_0^1 phi(t) phi(t)^T dt via principal angles;
/// angles below 1e-8 use the analytic zero-angle limits.
GeodesicKernel gfk_compute(const numerics::Subspace& u,
                           const numerics::Subspace& v);

/// GFK pipeline: target rows mapped x -> G x, SVM on raw source rows.
double gfk_adapt_and_classify(const LabeledDataset& source,
                              const Matrix& target_unlabeled,
                              const LabeledDataset& target_test,
                              Eigen::Index k, const SvmParams& svm);

/// Projective model transfer: per class minimizes
///   1/2 ||t||^2 + (gamma/2) (||t||^2 - (u . t)^2) + mean hinge(target; t, b)
/// where u is the unit source hyperplane — the angle penalty written as the
/// squared component of t orthogonal to the source hyperplane, a convex
/// quadratic. Warm-started at the source classifier; returns the best iterate.
LinearClassifier pmt_train(const LinearClassifier& theta_source,
                           const LabeledDataset& target, double gamma,
                           int epochs, std::uint64_t seed);

/// The PMT objective summed over classes (orthogonal-component form).
double pmt_objective(const LinearClassifier& theta_tilde,
                     const LinearClassifier& theta_source,
                     const LabeledDataset& target, double gamma);

struct MmdtConfig {
  double c_source = 1.0;
  double c_target = 1.0;
  int theta_epochs = 60;      // inner budget for the classifier step
  int transform_epochs = 60;  // inner budget for the transform step
};

struct MmdtResult {
  LinearClassifier classifier;
  Matrix transform;            // d x d map from target to source space
  std::vector<double> losses;  // total objective after each outer iteration
};

/// Max-margin domain transform: alternating minimization of
///   1/2 sum_c ||theta_c||^2 + 1/2 ||A - I||_F^2
///   + C_s * sum_c mean hinge(X, Y_c; theta_c)
///   + C_t * sum_c mean hinge(A X~, Y~_c; theta_c).
/// Each half-step keeps its best iterate, so the recorded total loss is
/// non-increasing across outer iterations.
MmdtResult mmdt_train(const LabeledDataset& source, const LabeledDataset& target,
                      const MmdtConfig& cfg, int outer_iters,
                      std::uint64_t seed);

double mmdt_objective(const LinearClassifier& clf, const Matrix& transform,
                      const LabeledDataset& source, const LabeledDataset& target,
                      const MmdtConfig& cfg);

}  // namespace da::baselines
