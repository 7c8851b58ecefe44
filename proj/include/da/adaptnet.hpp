#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "da/data.hpp"
#include "da/numerics.hpp"

namespace da::net {

/// Affine layer y = x W^T + b with a per-layer learning-rate multiplier.
struct AffineLayer {
  Matrix w;  // out_dim x in_dim
  Vector b;  // out_dim
  double lr_multiplier = 1.0;
};

/// Feedforward net with a bridging layer trained from scratch:
/// backbone (identity-initialized affine, stands in for the frozen
/// pretrained stack, lr x1), adaptation layer (affine + ReLU, lr x10),
/// softmax classifier (lr x10).
struct AdaptationNet {
  AffineLayer backbone;    // input_dim -> input_dim
  AffineLayer adapt;       // input_dim -> width
  AffineLayer classifier;  // width -> n_classes

  Eigen::Index input_dim() const { return backbone.w.cols(); }
  Eigen::Index width() const { return adapt.w.rows(); }
  Eigen::Index n_classes() const { return classifier.w.rows(); }
};

struct ForwardResult {
  Matrix adapt_activations;    // rows x width, post-ReLU
  Matrix class_probabilities;  // rows x n_classes, rows sum to 1
};

struct JointLossConfig {
  double lambda = 0.25;  // weight of the squared-MMD confusion term
  int batch_size = 64;   // split evenly between source and target pool draws
  bool supervised = false;
};

struct OptimizerConfig {
  double base_lr = 1e-3;
  double momentum = 0.9;
  int iterations = 1000;
  int eval_interval = 10;
};

struct TrainRecord {
  int iteration = 0;
  double cls_loss = 0.0;  // cross-entropy over the full labeled training set
  double mmd = 0.0;       // linear MMD between pooled adapt activations
  std::optional<double> test_accuracy;
};

struct TrainReport {
  std::vector<TrainRecord> records;
  std::uint64_t seed = 0;
};

struct LayerGrads {
  Matrix w;
  Vector b;
};

struct NetGrads {
  LayerGrads backbone;
  LayerGrads adapt;
  LayerGrads classifier;
};

/// Fresh network: backbone = exact identity, adaptation layer and classifier
/// drawn from N(0, 2/fan_in) with zero biases. Bitwise deterministic per seed.
AdaptationNet init_net(Eigen::Index input_dim, Eigen::Index width,
                       Eigen::Index n_classes, std::uint64_t seed);

ForwardResult forward(const AdaptationNet& net, const Matrix& x);

/// CE + lambda * MMD^2: mean cross-entropy of the labeled batch plus the
/// squared linear MMD between the adapt activations of the two pool batches.
double joint_loss(const AdaptationNet& net, const LabeledDataset& labeled_batch,
                  const Matrix& source_pool_batch,
                  const Matrix& target_pool_batch, const JointLossConfig& cfg);

/// Exact analytic gradient of joint_loss for every weight and bias, including
/// the MMD^2 path through both pool batches.
NetGrads gradient(const AdaptationNet& net, const LabeledDataset& labeled_batch,
                  const Matrix& source_pool_batch,
                  const Matrix& target_pool_batch, const JointLossConfig& cfg);

/// Worst relative error |analytic - central difference| / max(|a|, |f|, 1e-8)
/// over every parameter coordinate.
double grad_check(const AdaptationNet& net, const LabeledDataset& labeled_batch,
                  const Matrix& source_pool_batch,
                  const Matrix& target_pool_batch, const JointLossConfig& cfg,
                  double step);

/// Minibatch SGD with momentum on the joint loss. Each iteration draws
/// batch_size/2 source and batch_size/2 target-pool rows (with replacement)
/// for the MMD term; the classification term sees the source half, plus a
/// batch_size/2 draw of labeled target rows when supervised. Per-layer step is
/// base_lr * lr_multiplier. Deterministic per seed. eval_test, when given,
/// adds target test accuracy to the report records.
TrainReport train(AdaptationNet& net, const LabeledDataset& source,
                  const LabeledDataset* target_labeled,
                  const Matrix& target_unlabeled, const JointLossConfig& cfg,
                  const OptimizerConfig& opt, std::uint64_t seed,
                  const LabeledDataset* eval_test = nullptr);

/// Fraction of test rows whose argmax probability matches the label; argmax
/// ties break toward the lower class index.
double evaluate(const AdaptationNet& net, const LabeledDataset& test);

/// Gradient verification sweep: n_configs random tiny networks (input dims
/// 2..6, widths 1..4, 2..4 classes, lambda cycling over {0, 0.25, 2}),
/// perturbed away from ReLU kinks, each checked with grad_check. Returns the
/// worst relative error seen.
double grad_check_sweep(std::uint64_t seed, int n_configs, double step = 1e-5);

/// Flat binary weight format: magic "DBNT", version u32, dims u32x3, then each
/// layer's weights row-major as 64-bit little-endian floats followed by its
/// bias.
void save_weights(const AdaptationNet& net, const std::string& path);
AdaptationNet load_weights(const std::string& path);

}  // namespace da::net
