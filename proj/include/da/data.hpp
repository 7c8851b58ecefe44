#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "da/numerics.hpp"

namespace da {

/// Features plus class labels, the unit of ingestion and splitting.
/// n_classes is carried explicitly so that a subset missing some class keeps
/// the original label space.
struct LabeledDataset {
  Matrix features;                // rows = examples
  std::vector<int> labels;        // each in [0, n_classes)
  std::string domain;             // e.g. "amazon", "synthetic-target"
  std::vector<std::string> ids;   // unique per row
  int n_classes = 0;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index cols() const { return features.cols(); }

  /// Throws DataError if any invariant is violated (sizes, label range,
  /// duplicate ids, non-finite features).
  void validate() const;

  /// Subset by row indices, preserving order.
  LabeledDataset subset(const std::vector<Eigen::Index>& rows) const;
};

namespace data {

struct SplitSpec {
  int n_source_per_class = 20;
  int n_target_labeled_per_class = 3;  // 0 = unsupervised
  int n_splits = 5;
  std::uint64_t seed = 0;
};

struct Split {
  LabeledDataset source_train;
  LabeledDataset target_train_labeled;  // empty when unsupervised
  LabeledDataset target_test;
};

/// Parses the feature CSV format: UTF-8, LF endings, header
/// `id,domain,label,f0,...,f{d-1}`, no quoting. Throws DataError with the
/// offending line number on malformed input, non-finite values or duplicate
/// ids.
LabeledDataset load_features(const std::string& path);

void save_features(const LabeledDataset& ds, const std::string& path);

/// The dataset rendered in the feature CSV format (what save_features writes).
std::string to_csv(const LabeledDataset& ds);

/// Benchmark protocol: per split, sample n_source_per_class source examples
/// per class and n_target_labeled_per_class target examples per class without
/// replacement; the remaining target examples form the test set. Deterministic
/// per (seed, split index). Throws DataError naming the class when a class has
/// too few examples.
std::vector<Split> make_splits(const LabeledDataset& source,
                               const LabeledDataset& target,
                               const SplitSpec& spec);

struct DomainShift {
  Vector mean_offset;            // size dim, or empty for none
  double rotation_angle = 0.0;   // radians, applied in the first two coords
};

struct SynthSpec {
  int n_classes = 5;
  int dim = 16;
  int n_per_class_source = 40;
  int n_per_class_target = 40;
  DomainShift shift;
  double noise_sd = 0.5;
  std::uint64_t seed = 0;
};

/// Synthetic covariate-shift task. Class means sit on a scaled simplex
/// (scale * e_{c mod dim}, with the radius growing when classes exceed the
/// dimension); source samples are mean + Gaussian noise; target samples are
/// fresh draws from the same means, rotated in the first two coordinates and
/// translated by the offset. Deterministic per seed.
std::pair<LabeledDataset, LabeledDataset> synth_domains(const SynthSpec& spec);

/// Simplex scale used by synth_domains; exposed so tests can reason about
/// margins.
inline constexpr double kSynthScale = 4.0;

}  // namespace data
}  // namespace da
